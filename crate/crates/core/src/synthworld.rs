//! Deterministic synthetic worlds with calibrated perceptual aliasing.
//!
//! A world is a small graph of segments (places and the gaps connecting
//! them) embedded in the plane. Each segment carries one appearance latent;
//! segments in an alias group share their latent exactly, so retracing an
//! aliased twin reproduces the appearance of the original place. Frame
//! descriptors are unit-normalized latents plus scaled noise, which makes
//! similarity margins analytically controllable. The layout graph doubles as
//! the exact route-distance oracle.
//!
//! Case generation follows the ambiguity taxonomy: a revisit of a place with
//! an aliased mapped twin, a revisit of a unique place, and a walk through
//! an unmapped place whose twin is mapped. Test sequences draw fresh noise
//! at a per-case level, standing in for the appearance change between
//! mapping and test time; this is what spreads decision scores across the
//! threshold range instead of clumping them at 1.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ambiguity::{
    build_correspondence, classify_case, AmbiguityParams, CaseLabel, Classification,
    Correspondence, TestCase,
};
use crate::error::{Error, Result};
use crate::frame::{unit_normalize, Frame, Position, Sequence, SequenceRole};
use crate::graph::UpdatePolicyParams;
use crate::policy::build_policy_map;
use crate::route::RouteOracle;

/// Latents of distinct segments are redrawn until their cosine stays below
/// this, which caps the similarity two unrelated places can reach.
pub const MAX_CROSS_COSINE: f64 = 0.22;
const LATENT_DRAW_RETRIES: usize = 200;
/// Frames sit at half-step offsets inside segments, never on junctions.
const SLOT_OFFSET: f64 = 0.5;
const CASE_DRAW_RETRIES: usize = 20;

/// Shape of the world graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LayoutKind {
    /// A winding chain of place segments joined by gap segments.
    Corridor { places: usize },
    /// A closed polygon of alternating place and gap segments.
    Loop { places: usize },
    /// A lattice; horizontal edges are places, vertical edges connect rows.
    Grid { rows: usize, cols: usize },
}

/// One straight segment of the layout with its planar embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub id: usize,
    /// Junction at the walk-orientation start.
    pub a: usize,
    /// Junction at the walk-orientation end.
    pub b: usize,
    pub length: f64,
    pub start: Position,
    pub end: Position,
    /// Place segments host case windows and may be aliased; the rest are
    /// connective tissue.
    pub is_place: bool,
}

impl Segment {
    fn point_at(&self, offset: f64) -> Position {
        let t = offset / self.length;
        Position::new2d(
            self.start.x + (self.end.x - self.start.x) * t,
            self.start.y + (self.end.y - self.start.y) * t,
        )
    }
}

/// The segment graph plus the canonical walk order that traverses it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub junction_count: usize,
    pub segments: Vec<Segment>,
    /// Ids of place segments in canonical walk order.
    pub place_segments: Vec<usize>,
    /// Segment ids in the order the canonical mapping walk traverses them;
    /// every consecutive pair shares a junction.
    pub walk_order: Vec<usize>,
}

impl Layout {
    /// Chain of `places` rows joined by vertical gaps, laid out boustrophedon
    /// so consecutive rows stay `gap_len` apart.
    fn corridor(places: usize, place_len: f64, gap_len: f64) -> Result<Layout> {
        if places == 0 {
            return Err(Error::InvalidWorldSpec("corridor needs at least one place".into()));
        }
        let mut segments = Vec::new();
        let mut place_ids = Vec::new();
        let mut junctions = 0usize;
        let mut cursor = Position::new2d(0.0, 0.0);
        let mut heading_right = true;
        for p in 0..places {
            let end = Position::new2d(
                cursor.x + if heading_right { place_len } else { -place_len },
                cursor.y,
            );
            let id = segments.len();
            segments.push(Segment {
                id,
                a: junctions,
                b: junctions + 1,
                length: place_len,
                start: cursor,
                end,
                is_place: true,
            });
            place_ids.push(id);
            junctions += 1;
            cursor = end;
            if p + 1 < places {
                let up = Position::new2d(cursor.x, cursor.y + gap_len);
                let id = segments.len();
                segments.push(Segment {
                    id,
                    a: junctions,
                    b: junctions + 1,
                    length: gap_len,
                    start: cursor,
                    end: up,
                    is_place: false,
                });
                junctions += 1;
                cursor = up;
                heading_right = !heading_right;
            }
        }
        junctions += 1;
        let walk_order = (0..segments.len()).collect();
        Ok(Layout {
            junction_count: junctions,
            segments,
            place_segments: place_ids,
            walk_order,
        })
    }

    /// Closed polygon with `places` sides; each side is a place segment
    /// followed by a gap segment, so the ring closes exactly.
    fn ring(places: usize, place_len: f64, gap_len: f64) -> Result<Layout> {
        if places < 3 {
            return Err(Error::InvalidWorldSpec("loop needs at least three places".into()));
        }
        let side = place_len + gap_len;
        let n = places as f64;
        let radius = side / (2.0 * (std::f64::consts::PI / n).sin());
        let vertex = |i: usize| {
            let angle = 2.0 * std::f64::consts::PI * i as f64 / n;
            Position::new2d(radius * angle.cos(), radius * angle.sin())
        };
        let mut segments = Vec::new();
        let mut place_ids = Vec::new();
        // Junction ids: 2i at polygon vertex i, 2i+1 at the split point of
        // side i.
        for i in 0..places {
            let v0 = vertex(i);
            let v1 = vertex((i + 1) % places);
            let frac = place_len / side;
            let mid = Position::new2d(v0.x + (v1.x - v0.x) * frac, v0.y + (v1.y - v0.y) * frac);
            let id = segments.len();
            segments.push(Segment {
                id,
                a: 2 * i,
                b: 2 * i + 1,
                length: place_len,
                start: v0,
                end: mid,
                is_place: true,
            });
            place_ids.push(id);
            let id = segments.len();
            segments.push(Segment {
                id,
                a: 2 * i + 1,
                b: 2 * ((i + 1) % places),
                length: gap_len,
                start: mid,
                end: v1,
                is_place: false,
            });
        }
        let walk_order = (0..segments.len()).collect();
        Ok(Layout {
            junction_count: 2 * places,
            segments,
            place_segments: place_ids,
            walk_order,
        })
    }

    /// Lattice of `rows x cols` junctions spaced `edge_len` apart. The
    /// horizontal edges are places, oriented along the serpentine walk; all
    /// vertical edges exist in the graph, but only the turn columns are
    /// walked.
    fn grid(rows: usize, cols: usize, edge_len: f64) -> Result<Layout> {
        if rows < 2 || cols < 2 {
            return Err(Error::InvalidWorldSpec("grid needs at least 2x2 junctions".into()));
        }
        let at = |r: usize, c: usize| Position::new2d(c as f64 * edge_len, r as f64 * edge_len);
        let jid = |r: usize, c: usize| r * cols + c;
        let mut segments = Vec::new();
        let mut place_ids = Vec::new();
        let mut walk_order = Vec::new();
        for r in 0..rows {
            let rightward = r % 2 == 0;
            let cs: Vec<usize> = if rightward {
                (0..cols - 1).collect()
            } else {
                (0..cols - 1).rev().collect()
            };
            for &c in &cs {
                let (ja, jb) = if rightward {
                    (jid(r, c), jid(r, c + 1))
                } else {
                    (jid(r, c + 1), jid(r, c))
                };
                let id = segments.len();
                segments.push(Segment {
                    id,
                    a: ja,
                    b: jb,
                    length: edge_len,
                    start: at(ja / cols, ja % cols),
                    end: at(jb / cols, jb % cols),
                    is_place: true,
                });
                place_ids.push(id);
                walk_order.push(id);
            }
            if r + 1 < rows {
                let c = if rightward { cols - 1 } else { 0 };
                let id = segments.len();
                segments.push(Segment {
                    id,
                    a: jid(r, c),
                    b: jid(r + 1, c),
                    length: edge_len,
                    start: at(r, c),
                    end: at(r + 1, c),
                    is_place: false,
                });
                walk_order.push(id);
            }
        }
        // Remaining vertical edges: present in the graph, never walked by
        // the canonical serpentine.
        for r in 0..rows - 1 {
            for c in 0..cols {
                let rightward = r % 2 == 0;
                let turn_col = if rightward { cols - 1 } else { 0 };
                if c == turn_col {
                    continue;
                }
                let id = segments.len();
                segments.push(Segment {
                    id,
                    a: jid(r, c),
                    b: jid(r + 1, c),
                    length: edge_len,
                    start: at(r, c),
                    end: at(r + 1, c),
                    is_place: false,
                });
            }
        }
        Ok(Layout {
            junction_count: rows * cols,
            segments,
            place_segments: place_ids,
            walk_order,
        })
    }
}

/// Specification of a synthetic world. Unset fields of a spec file fall
/// back to these defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldSpec {
    pub layout: LayoutKind,
    /// Length of each place segment in meters; a multiple of the frame
    /// spacing. Grids use it for every lattice edge.
    pub place_len: f64,
    /// Length of the gap segments between places.
    pub gap_len: f64,
    pub frame_spacing: f64,
    pub descriptor_dim: usize,
    /// Norm of the noise added to every mapping-run descriptor.
    pub noise_sigma: f64,
    /// Groups of place indices (into the canonical place order) sharing one
    /// appearance latent.
    pub alias_groups: Vec<Vec<usize>>,
    pub seed: u64,
}

impl WorldSpec {
    pub fn validate(&self) -> Result<()> {
        let fs = self.frame_spacing;
        if fs <= 0.0 {
            return Err(Error::InvalidWorldSpec("frame_spacing must be > 0".into()));
        }
        for (name, len) in [("place_len", self.place_len), ("gap_len", self.gap_len)] {
            if len <= 0.0 {
                return Err(Error::InvalidWorldSpec(format!("{name} must be > 0")));
            }
            let slots = (len / fs).round();
            if slots < 1.0 || (slots * fs - len).abs() > 1e-9 {
                return Err(Error::InvalidWorldSpec(format!(
                    "{name} = {len} is not a positive multiple of frame_spacing {fs}"
                )));
            }
        }
        if self.descriptor_dim < 8 {
            return Err(Error::InvalidWorldSpec(format!(
                "descriptor_dim must be >= 8 (got {})",
                self.descriptor_dim
            )));
        }
        if !(0.0..=2.0).contains(&self.noise_sigma) {
            return Err(Error::InvalidWorldSpec(format!(
                "noise_sigma must be in [0, 2] (got {})",
                self.noise_sigma
            )));
        }
        let place_count = match self.layout {
            LayoutKind::Corridor { places } => places,
            LayoutKind::Loop { places } => places,
            LayoutKind::Grid { rows, cols } => rows * (cols - 1),
        };
        let mut seen = std::collections::BTreeSet::new();
        for group in &self.alias_groups {
            if group.len() < 2 {
                return Err(Error::InvalidWorldSpec(
                    "alias groups need at least two members".into(),
                ));
            }
            for &m in group {
                if m >= place_count {
                    return Err(Error::InvalidWorldSpec(format!(
                        "alias group member {m} exceeds place count {place_count}"
                    )));
                }
                if !seen.insert(m) {
                    return Err(Error::InvalidWorldSpec(format!(
                        "place {m} appears in more than one alias group"
                    )));
                }
            }
        }
        Ok(())
    }
}

impl Default for WorldSpec {
    fn default() -> Self {
        Self {
            layout: LayoutKind::Corridor { places: 4 },
            place_len: 5.0,
            gap_len: 6.0,
            frame_spacing: 1.0,
            descriptor_dim: 64,
            noise_sigma: 0.05,
            alias_groups: vec![],
            seed: 7,
        }
    }
}

/// One step of a traversal: a segment walked forward or reversed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkStep {
    pub segment: usize,
    pub reversed: bool,
}

impl WalkStep {
    pub fn fwd(segment: usize) -> Self {
        Self {
            segment,
            reversed: false,
        }
    }

    pub fn rev(segment: usize) -> Self {
        Self {
            segment,
            reversed: true,
        }
    }
}

/// A generated world: layout, per-segment appearance latents, and the
/// junction distance table backing the route oracle.
#[derive(Debug, Clone)]
pub struct World {
    pub spec: WorldSpec,
    pub layout: Layout,
    latents: Vec<Vec<f32>>,
    junction_dist: Vec<Vec<f64>>,
}

/// Builds a world deterministically from its spec.
pub fn generate_world(spec: &WorldSpec) -> Result<World> {
    spec.validate()?;
    let layout = match spec.layout {
        LayoutKind::Corridor { places } => Layout::corridor(places, spec.place_len, spec.gap_len)?,
        LayoutKind::Loop { places } => Layout::ring(places, spec.place_len, spec.gap_len)?,
        LayoutKind::Grid { rows, cols } => Layout::grid(rows, cols, spec.place_len)?,
    };
    let junction_dist = all_pairs_junction_distances(&layout);
    if junction_dist
        .iter()
        .any(|row| row.iter().any(|d| !d.is_finite()))
    {
        return Err(Error::InvalidWorldSpec("layout graph is disconnected".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let latents = draw_latents(spec, &layout, &mut rng)?;
    Ok(World {
        spec: spec.clone(),
        layout,
        latents,
        junction_dist,
    })
}

fn all_pairs_junction_distances(layout: &Layout) -> Vec<Vec<f64>> {
    let n = layout.junction_count;
    let mut dist = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in dist.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for seg in &layout.segments {
        if seg.length < dist[seg.a][seg.b] {
            dist[seg.a][seg.b] = seg.length;
            dist[seg.b][seg.a] = seg.length;
        }
    }
    for k in 0..n {
        for i in 0..n {
            if dist[i][k].is_infinite() {
                continue;
            }
            for j in 0..n {
                let via = dist[i][k] + dist[k][j];
                if via < dist[i][j] {
                    dist[i][j] = via;
                }
            }
        }
    }
    dist
}

fn random_unit(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
    let v: Vec<f32> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal) as f32).collect();
    unit_normalize(v)
}

/// Assigns one latent per segment. Alias-group members copy their group
/// representative; all distinct latents keep pairwise cosine below the
/// cross-cosine cap.
fn draw_latents(spec: &WorldSpec, layout: &Layout, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f32>>> {
    // Map each segment to the segment it copies its latent from.
    let mut rep: Vec<usize> = (0..layout.segments.len()).collect();
    for group in &spec.alias_groups {
        let leader = layout.place_segments[group[0]];
        for &m in &group[1..] {
            rep[layout.place_segments[m]] = leader;
        }
    }
    let mut latents: Vec<Option<Vec<f32>>> = vec![None; layout.segments.len()];
    let mut distinct: Vec<Vec<f32>> = Vec::new();
    for seg in 0..layout.segments.len() {
        if rep[seg] != seg {
            continue;
        }
        let mut accepted = None;
        for _ in 0..LATENT_DRAW_RETRIES {
            let cand = random_unit(spec.descriptor_dim, rng);
            let ok = distinct
                .iter()
                .all(|prev| crate::similarity::cosine(&cand, prev) < MAX_CROSS_COSINE);
            if ok {
                accepted = Some(cand);
                break;
            }
        }
        let lat = accepted.ok_or_else(|| {
            Error::InvalidWorldSpec(format!(
                "could not draw {} well-separated latents at dimension {}; raise descriptor_dim",
                distinct.len() + 1,
                spec.descriptor_dim
            ))
        })?;
        distinct.push(lat.clone());
        latents[seg] = Some(lat);
    }
    for seg in 0..layout.segments.len() {
        if latents[seg].is_none() {
            latents[seg] = latents[rep[seg]].clone();
        }
    }
    Ok(latents.into_iter().map(|l| l.unwrap()).collect())
}

impl World {
    pub fn latent(&self, segment: usize) -> &[f32] {
        &self.latents[segment]
    }

    pub fn slots(&self, segment: usize) -> usize {
        (self.layout.segments[segment].length / self.spec.frame_spacing).round() as usize
    }

    /// Locates a pose on the layout, returning `(segment, offset)`.
    pub fn locate(&self, pose: &Position) -> Result<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for seg in &self.layout.segments {
            let dx = seg.end.x - seg.start.x;
            let dy = seg.end.y - seg.start.y;
            let len2 = dx * dx + dy * dy;
            let t = (((pose.x - seg.start.x) * dx + (pose.y - seg.start.y) * dy) / len2)
                .clamp(0.0, 1.0);
            let px = seg.start.x + t * dx;
            let py = seg.start.y + t * dy;
            let dist = ((pose.x - px).powi(2) + (pose.y - py).powi(2)).sqrt();
            let better = match best {
                None => true,
                Some((_, _, bd)) => dist < bd,
            };
            if better {
                best = Some((seg.id, t * seg.length, dist));
            }
        }
        let (seg, off, dist) = best.ok_or_else(|| Error::InvalidWorldSpec("empty layout".into()))?;
        if dist > 1e-6 {
            return Err(Error::PoseOffLayout {
                x: pose.x,
                y: pose.y,
                dist,
            });
        }
        Ok((seg, off))
    }

    /// Exact geodesic between two layout positions.
    pub fn geodesic(&self, a: (usize, f64), b: (usize, f64)) -> f64 {
        let (sa, oa) = a;
        let (sb, ob) = b;
        let seg_a = &self.layout.segments[sa];
        let seg_b = &self.layout.segments[sb];
        let mut best = if sa == sb {
            (oa - ob).abs()
        } else {
            f64::INFINITY
        };
        for (ja, da) in [(seg_a.a, oa), (seg_a.b, seg_a.length - oa)] {
            for (jb, db) in [(seg_b.a, ob), (seg_b.b, seg_b.length - ob)] {
                let via = da + self.junction_dist[ja][jb] + db;
                if via < best {
                    best = via;
                }
            }
        }
        best
    }

    pub fn route_between_poses(&self, a: &Position, b: &Position) -> Result<f64> {
        Ok(self.geodesic(self.locate(a)?, self.locate(b)?))
    }

    /// The canonical mapping walk over the whole layout.
    pub fn canonical_walk(&self) -> Vec<WalkStep> {
        self.layout.walk_order.iter().map(|&s| WalkStep::fwd(s)).collect()
    }

    /// Canonical walk truncated after the `mapped_places`-th place segment.
    pub fn mapped_prefix_walk(&self, mapped_places: usize) -> Vec<WalkStep> {
        let last_place = self.layout.place_segments[mapped_places - 1];
        let mut walk = Vec::new();
        for &seg in &self.layout.walk_order {
            walk.push(WalkStep::fwd(seg));
            if seg == last_place {
                break;
            }
        }
        walk
    }

    /// A walk that revisits mapped territory, exercising correct accepts:
    /// the full canonical walk followed by a return over its tail.
    pub fn revisit_walk(&self, revisit_segments: usize) -> Vec<WalkStep> {
        let mut walk = self.canonical_walk();
        match self.spec.layout {
            LayoutKind::Loop { .. } => {
                // Continue around the ring a second time.
                let lap: Vec<WalkStep> = walk.iter().copied().take(revisit_segments.max(1)).collect();
                walk.extend(lap);
            }
            _ => {
                let back: Vec<WalkStep> = walk
                    .iter()
                    .rev()
                    .take(revisit_segments.max(1))
                    .map(|s| WalkStep {
                        segment: s.segment,
                        reversed: !s.reversed,
                    })
                    .collect();
                walk.extend(back);
            }
        }
        walk
    }

    fn walk_is_continuous(&self, walk: &[WalkStep]) -> bool {
        walk.windows(2).all(|w| {
            let end = self.step_end_junction(&w[0]);
            let start = self.step_start_junction(&w[1]);
            end == start
        })
    }

    fn step_start_junction(&self, step: &WalkStep) -> usize {
        let seg = &self.layout.segments[step.segment];
        if step.reversed {
            seg.b
        } else {
            seg.a
        }
    }

    fn step_end_junction(&self, step: &WalkStep) -> usize {
        let seg = &self.layout.segments[step.segment];
        if step.reversed {
            seg.a
        } else {
            seg.b
        }
    }

    /// Synthesizes the frames of a walk: poses from the embedding, traversal
    /// distance accumulating along the walk, descriptors from segment
    /// latents plus noise of norm `noise_sigma`.
    pub fn frames_along(
        &self,
        walk: &[WalkStep],
        role: SequenceRole,
        noise_sigma: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<Sequence> {
        if walk.is_empty() {
            return Err(Error::EmptySequence);
        }
        if !self.walk_is_continuous(walk) {
            return Err(Error::InvalidWorldSpec(
                "walk steps do not share junctions".into(),
            ));
        }
        let fs = self.spec.frame_spacing;
        let mut frames = Vec::new();
        for step in walk {
            let seg = &self.layout.segments[step.segment];
            let slots = self.slots(step.segment);
            for k in 0..slots {
                let slot = if step.reversed { slots - 1 - k } else { k };
                let offset = (slot as f64 + SLOT_OFFSET) * fs;
                let idx = frames.len();
                let descriptor = self.noisy_descriptor(step.segment, noise_sigma, rng);
                frames.push(Frame {
                    frame_id: idx,
                    timestamp: idx as f64,
                    pose: seg.point_at(offset),
                    traversal_dist: idx as f64 * fs,
                    descriptor: Some(descriptor),
                });
            }
        }
        Sequence::new(frames, role)
    }

    fn noisy_descriptor(&self, segment: usize, sigma: f64, rng: &mut ChaCha8Rng) -> Vec<f32> {
        let latent = &self.latents[segment];
        let noise = random_unit(latent.len(), rng);
        let v: Vec<f32> = latent
            .iter()
            .zip(noise.iter())
            .map(|(&l, &n)| l + (sigma as f32) * n)
            .collect();
        unit_normalize(v)
    }
}

/// Route oracle backed by a world's layout graph.
pub struct WorldRouteOracle<'a> {
    pub world: &'a World,
}

impl RouteOracle for WorldRouteOracle<'_> {
    fn route_distance(&self, a: &Frame, b: &Frame) -> Result<f64> {
        self.world.route_between_poses(&a.pose, &b.pose)
    }
}

/// Requested number of cases per label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CaseCounts {
    #[serde(rename = "A+P", default)]
    pub ambiguous_positive: usize,
    #[serde(rename = "P.O.", default)]
    pub positive_only: usize,
    #[serde(rename = "A.O.", default)]
    pub ambiguous_only: usize,
    #[serde(rename = "NOVEL", default)]
    pub novel_clean: usize,
}

impl CaseCounts {
    pub fn total(&self) -> usize {
        self.ambiguous_positive + self.positive_only + self.ambiguous_only + self.novel_clean
    }
}

/// Specification of a full synthetic benchmark suite. Unset fields of a
/// spec file fall back to the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteSpec {
    pub seed: u64,
    pub environments: usize,
    /// Total case counts, distributed round-robin over environments.
    pub counts: CaseCounts,
    /// Window length in frames; place segments are exactly one window long.
    pub seq_len: usize,
    pub frame_spacing: f64,
    pub descriptor_dim: usize,
    /// Mapping-run descriptor noise norm.
    pub noise_sigma: f64,
    /// Required classification margin around the ambiguity thresholds.
    pub margin: f64,
    pub alpha: f64,
    pub tau: f64,
    pub align_radius: f64,
    /// Fraction of cases presented without an approach trajectory.
    pub kidnapped_fraction: f64,
    /// Approach length, in frames, for the loop-closure variant.
    pub approach_len: usize,
    /// Target true-match window similarity range for ambiguous revisits;
    /// test noise is derived from it. These cases carry the strongest
    /// appearance change, which is what narrows the gap to their distractor.
    pub ap_sim_range: (f64, f64),
    /// Target true-match window similarity range for clean revisits; spans
    /// the novel look-alike range so rejection thresholds genuinely trade
    /// revisit acceptance against novel-case safety.
    pub po_sim_range: (f64, f64),
    /// Target look-alike window similarity range for novel aliased cases.
    pub novel_sim_range: (f64, f64),
}

impl Default for SuiteSpec {
    fn default() -> Self {
        Self {
            seed: 7,
            environments: 1,
            counts: CaseCounts {
                ambiguous_positive: 2,
                positive_only: 4,
                ambiguous_only: 2,
                novel_clean: 0,
            },
            seq_len: 5,
            frame_spacing: 1.0,
            descriptor_dim: 256,
            noise_sigma: 0.05,
            margin: 0.05,
            alpha: 0.9,
            tau: 0.7,
            align_radius: 0.5,
            kidnapped_fraction: 0.5,
            approach_len: 5,
            ap_sim_range: (0.78, 0.88),
            po_sim_range: (0.84, 0.97),
            novel_sim_range: (0.80, 0.96),
        }
    }
}

impl SuiteSpec {
    pub fn validate(&self) -> Result<()> {
        if self.environments == 0 {
            return Err(Error::InvalidWorldSpec("environments must be >= 1".into()));
        }
        if self.counts.total() == 0 {
            return Err(Error::InvalidWorldSpec("counts request no cases".into()));
        }
        if self.seq_len < 2 {
            return Err(Error::InvalidWorldSpec("seq_len must be >= 2".into()));
        }
        let params = AmbiguityParams::new(self.tau, self.alpha, self.seq_len)?;
        let _ = params;
        for (name, (lo, hi)) in [
            ("ap_sim_range", self.ap_sim_range),
            ("po_sim_range", self.po_sim_range),
            ("novel_sim_range", self.novel_sim_range),
        ] {
            if !(0.0 < lo && lo <= hi && hi < 1.0) {
                return Err(Error::InvalidWorldSpec(format!(
                    "{name} must satisfy 0 < lo <= hi < 1"
                )));
            }
        }
        if self.novel_sim_range.0 < self.tau + self.margin + 0.01 {
            return Err(Error::UnattainableMargin {
                requested: self.margin,
                achievable: self.novel_sim_range.0 - self.tau - 0.01,
            });
        }
        if self.kidnapped_fraction < 0.0 || self.kidnapped_fraction > 1.0 {
            return Err(Error::InvalidWorldSpec(
                "kidnapped_fraction must be in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn ambiguity_params(&self) -> AmbiguityParams {
        AmbiguityParams {
            tau: self.tau,
            alpha: self.alpha,
            seq_len: self.seq_len,
        }
    }
}

/// One generated test case with its verification evidence.
#[derive(Debug, Clone)]
pub struct GeneratedCase {
    pub case_id: String,
    pub environment: String,
    pub map_seq: Arc<Sequence>,
    pub test_seq: Sequence,
    pub intended_label: CaseLabel,
    /// Margin the case was verified against.
    pub margin: f64,
    pub kidnapped: bool,
    pub correspondence: Correspondence,
    /// The classification measured on the generated data; its label always
    /// equals `intended_label`.
    pub measured: Classification,
}

/// One generated environment: a world, its mapping sequence, and its cases.
#[derive(Debug, Clone)]
pub struct GeneratedEnvironment {
    pub name: String,
    pub world: World,
    pub map_seq: Arc<Sequence>,
    pub cases: Vec<GeneratedCase>,
}

impl GeneratedEnvironment {
    /// Builds the policy map for this environment and assembles evaluable
    /// test cases. Mapping walks never revisit, so the traversal estimator
    /// is exact here and matches what a reloaded export would use.
    pub fn to_test_cases(
        &self,
        policy: &UpdatePolicyParams,
        match_radius: f64,
    ) -> Result<Vec<TestCase>> {
        let (map, _) = build_policy_map(
            &self.map_seq,
            policy,
            &crate::route::TraversalOracle,
            match_radius,
        )?;
        let map = Arc::new(map);
        Ok(self
            .cases
            .iter()
            .map(|c| TestCase {
                case_id: c.case_id.clone(),
                environment: c.environment.clone(),
                map_seq: Arc::clone(&c.map_seq),
                map: Arc::clone(&map),
                test_seq: c.test_seq.clone(),
                correspondence: c.correspondence.clone(),
                label: Some(c.measured.clone()),
            })
            .collect())
    }
}

/// Converts a target affine-mapped similarity into the noise norm that
/// produces it between a noisy descriptor and its clean latent: a noise
/// direction of norm `s` shrinks the cosine to `1 / sqrt(1 + s^2)`.
fn noise_for_target_sim(target_sim: f64) -> f64 {
    let cos = (2.0 * target_sim - 1.0).clamp(1e-3, 1.0 - 1e-9);
    (1.0 / (cos * cos) - 1.0).sqrt()
}

struct PlaceRoles {
    // Place indices (into canonical place order) per role.
    ap_targets: Vec<usize>,
    ap_twins: Vec<usize>,
    po_targets: Vec<usize>,
    ao_mapped: Vec<usize>,
    ao_novel: Vec<usize>,
    nc_novel: Vec<usize>,
    mapped_places: usize,
}

fn plan_places(counts: &CaseCounts) -> PlaceRoles {
    let ap = counts.ambiguous_positive;
    let po = counts.positive_only;
    let ao = counts.ambiguous_only;
    let nc = counts.novel_clean;
    let ap_targets: Vec<usize> = (0..ap).map(|i| 2 * i).collect();
    let ap_twins: Vec<usize> = (0..ap).map(|i| 2 * i + 1).collect();
    let po_targets: Vec<usize> = (0..po).map(|i| 2 * ap + i).collect();
    let ao_mapped: Vec<usize> = (0..ao).map(|i| 2 * ap + po + i).collect();
    let mapped_places = 2 * ap + po + ao;
    let ao_novel: Vec<usize> = (0..ao).map(|i| mapped_places + i).collect();
    let nc_novel: Vec<usize> = (0..nc).map(|i| mapped_places + ao + i).collect();
    PlaceRoles {
        ap_targets,
        ap_twins,
        po_targets,
        ao_mapped,
        ao_novel,
        nc_novel,
        mapped_places,
    }
}

fn split_count(total: usize, envs: usize, env: usize) -> usize {
    total / envs + usize::from(env < total % envs)
}

/// Generates a whole synthetic benchmark suite: deterministic in the spec.
pub fn generate_suite(spec: &SuiteSpec) -> Result<Vec<GeneratedEnvironment>> {
    spec.validate()?;
    let mut environments = Vec::with_capacity(spec.environments);
    for e in 0..spec.environments {
        let counts = CaseCounts {
            ambiguous_positive: split_count(spec.counts.ambiguous_positive, spec.environments, e),
            positive_only: split_count(spec.counts.positive_only, spec.environments, e),
            ambiguous_only: split_count(spec.counts.ambiguous_only, spec.environments, e),
            novel_clean: split_count(spec.counts.novel_clean, spec.environments, e),
        };
        if counts.total() == 0 {
            continue;
        }
        environments.push(generate_environment(spec, e, &counts)?);
    }
    Ok(environments)
}

fn generate_environment(
    spec: &SuiteSpec,
    env_index: usize,
    counts: &CaseCounts,
) -> Result<GeneratedEnvironment> {
    let roles = plan_places(counts);
    let total_places = roles.mapped_places + roles.ao_novel.len() + roles.nc_novel.len();
    let mut alias_groups = Vec::new();
    for (t, w) in roles.ap_targets.iter().zip(&roles.ap_twins) {
        alias_groups.push(vec![*t, *w]);
    }
    for (m, n) in roles.ao_mapped.iter().zip(&roles.ao_novel) {
        alias_groups.push(vec![*m, *n]);
    }
    let env_seed = spec
        .seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(env_index as u64);
    let world_spec = WorldSpec {
        layout: LayoutKind::Corridor {
            places: total_places,
        },
        place_len: spec.seq_len as f64 * spec.frame_spacing,
        gap_len: (6.0 / spec.frame_spacing).ceil() * spec.frame_spacing,
        frame_spacing: spec.frame_spacing,
        descriptor_dim: spec.descriptor_dim,
        noise_sigma: spec.noise_sigma,
        alias_groups,
        seed: env_seed,
    };
    let world = generate_world(&world_spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(env_seed ^ 0xA5A5_5A5A_DEAD_BEEF);
    let map_walk = world.mapped_prefix_walk(roles.mapped_places);
    let map_seq = Arc::new(world.frames_along(
        &map_walk,
        SequenceRole::Map,
        spec.noise_sigma,
        &mut rng,
    )?);
    let name = format!("env{env_index:03}");

    let mut cases = Vec::new();
    let mut plans: Vec<(CaseLabel, usize)> = Vec::new();
    plans.extend(roles.ap_targets.iter().map(|&p| (CaseLabel::AmbiguousPositive, p)));
    plans.extend(roles.po_targets.iter().map(|&p| (CaseLabel::PositiveOnly, p)));
    plans.extend(roles.ao_novel.iter().map(|&p| (CaseLabel::AmbiguousOnly, p)));
    plans.extend(roles.nc_novel.iter().map(|&p| (CaseLabel::NovelClean, p)));
    for (case_no, (label, place)) in plans.into_iter().enumerate() {
        let kidnapped = rng.random_bool(spec.kidnapped_fraction);
        let case = generate_case(
            spec,
            &world,
            &map_seq,
            &name,
            case_no,
            label,
            place,
            kidnapped,
            &mut rng,
        )?;
        cases.push(case);
    }
    Ok(GeneratedEnvironment {
        name,
        world,
        map_seq,
        cases,
    })
}

/// Generates and verifies one test case of the requested kind on the given
/// place segment. The measured classification must reproduce the intended
/// label with the spec margin; a handful of fresh noise draws are attempted
/// before giving up with the achievable bound.
#[allow(clippy::too_many_arguments)]
fn generate_case(
    spec: &SuiteSpec,
    world: &World,
    map_seq: &Arc<Sequence>,
    env_name: &str,
    case_no: usize,
    label: CaseLabel,
    place: usize,
    kidnapped: bool,
    rng: &mut ChaCha8Rng,
) -> Result<GeneratedCase> {
    let params = spec.ambiguity_params();
    let mut last_err = None;
    for _attempt in 0..CASE_DRAW_RETRIES {
        let test_noise = match label {
            CaseLabel::AmbiguousPositive => {
                let (lo, hi) = spec.ap_sim_range;
                noise_for_target_sim(rng.random_range(lo..=hi))
            }
            CaseLabel::PositiveOnly => {
                let (lo, hi) = spec.po_sim_range;
                noise_for_target_sim(rng.random_range(lo..=hi))
            }
            CaseLabel::AmbiguousOnly => {
                let (lo, hi) = spec.novel_sim_range;
                noise_for_target_sim(rng.random_range(lo..=hi))
            }
            CaseLabel::NovelClean => spec.noise_sigma,
        };
        let walk = test_walk(world, place, kidnapped, spec)?;
        let seq = world.frames_along(&walk, SequenceRole::Test, test_noise, rng)?;
        // Novel cases must stay novel: their approach may cover at most the
        // unmapped gap leading into the window place.
        let approach = if kidnapped {
            0
        } else {
            match label {
                CaseLabel::AmbiguousOnly | CaseLabel::NovelClean => {
                    let gap_slots =
                        (world.spec.gap_len / world.spec.frame_spacing).round() as usize;
                    spec.approach_len.min(gap_slots.saturating_sub(1))
                }
                _ => spec.approach_len,
            }
        };
        let test_seq = trim_test_sequence(seq, spec.seq_len + approach)?;
        let corr = build_correspondence(&test_seq, map_seq, spec.align_radius);
        let measured = classify_case(&test_seq, map_seq, &corr, &params, &crate::similarity::CosineSim)?;
        match check_margin(&measured, label, spec) {
            Ok(()) => {
                return Ok(GeneratedCase {
                    case_id: format!("{env_name}-case{case_no:03}"),
                    environment: env_name.to_string(),
                    map_seq: Arc::clone(map_seq),
                    test_seq,
                    intended_label: label,
                    margin: spec.margin,
                    kidnapped,
                    correspondence: corr,
                    measured,
                });
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or(Error::UnattainableMargin {
        requested: spec.margin,
        achievable: 0.0,
    }))
}

/// The walk a test sequence takes: straight into the window place segment,
/// preceded by the chain segments leading up to it unless kidnapped.
fn test_walk(world: &World, place: usize, kidnapped: bool, spec: &SuiteSpec) -> Result<Vec<WalkStep>> {
    let target_seg = world.layout.place_segments[place];
    let mut upto = Vec::new();
    for &seg in &world.layout.walk_order {
        upto.push(WalkStep::fwd(seg));
        if seg == target_seg {
            break;
        }
    }
    if upto.last().map(|s| s.segment) != Some(target_seg) {
        return Err(Error::InvalidWorldSpec(format!(
            "place segment {target_seg} is not on the canonical walk"
        )));
    }
    if kidnapped {
        Ok(vec![WalkStep::fwd(target_seg)])
    } else {
        // Keep enough trailing segments to cover the approach frames.
        let needed = spec.approach_len + spec.seq_len;
        let fs = spec.frame_spacing;
        let mut frames = 0usize;
        let mut start = upto.len();
        while start > 0 && frames < needed {
            start -= 1;
            frames += (world.layout.segments[upto[start].segment].length / fs).round() as usize;
        }
        Ok(upto[start..].to_vec())
    }
}

/// Keeps the last `keep` frames and rebases ids, timestamps, and traversal
/// to the new start.
fn trim_test_sequence(seq: Sequence, keep: usize) -> Result<Sequence> {
    let frames = seq.frames();
    let skip = frames.len().saturating_sub(keep);
    let base_t = frames[skip].timestamp;
    let base_d = frames[skip].traversal_dist;
    let trimmed: Vec<Frame> = frames[skip..]
        .iter()
        .enumerate()
        .map(|(i, f)| Frame {
            frame_id: i,
            timestamp: f.timestamp - base_t,
            pose: f.pose,
            traversal_dist: f.traversal_dist - base_d,
            descriptor: f.descriptor.clone(),
        })
        .collect();
    Sequence::new(trimmed, SequenceRole::Test)
}

fn check_margin(measured: &Classification, intended: CaseLabel, spec: &SuiteSpec) -> Result<()> {
    let fail = |achievable: f64| Error::UnattainableMargin {
        requested: spec.margin,
        achievable,
    };
    if measured.label != intended {
        return Err(fail(0.0));
    }
    match intended {
        CaseLabel::AmbiguousPositive => {
            let ratio = measured.ratio.expect("revisit case has a ratio");
            if ratio < spec.alpha + spec.margin {
                return Err(fail(ratio - spec.alpha));
            }
        }
        CaseLabel::PositiveOnly => {
            let ratio = measured.ratio.expect("revisit case has a ratio");
            if ratio > spec.alpha - spec.margin {
                return Err(fail(spec.alpha - ratio));
            }
        }
        CaseLabel::AmbiguousOnly => {
            if measured.max_sim < spec.tau + spec.margin {
                return Err(fail(measured.max_sim - spec.tau));
            }
        }
        CaseLabel::NovelClean => {
            if measured.max_sim > spec.tau - spec.margin {
                return Err(fail(spec.tau - measured.max_sim));
            }
        }
    }
    Ok(())
}
