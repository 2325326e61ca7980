//! CityFlow-compatible roadnet files (the subset this model can represent):
//! intersections with an id, a point and a `virtual` flag, and roads with
//! start/end intersections, a polyline, per-lane max speeds and an optional
//! explicit `length`. Other fields are ignored with a warning.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::assemble::{assemble, NodeSpec, RoadSpec};
use super::*;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointDoc {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionDoc {
    pub id: String,
    pub point: PointDoc,
    #[serde(rename = "virtual", default)]
    pub is_virtual: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub roads: Vec<String>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(rename = "maxSpeed")]
    pub max_speed: f64,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadDoc {
    pub id: String,
    #[serde(rename = "startIntersection")]
    pub start: String,
    #[serde(rename = "endIntersection")]
    pub end: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<PointDoc>,
    pub lanes: Vec<LaneDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadnetDoc {
    pub intersections: Vec<IntersectionDoc>,
    pub roads: Vec<RoadDoc>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

/// Reads a roadnet file and maps it onto a [`RoadNetwork`].
pub fn load_roadnet(
    path: impl AsRef<Path>,
    vehicle_length: f64,
    min_gap: f64,
) -> Result<RoadNetwork, NetError> {
    let text = std::fs::read_to_string(path)?;
    let doc: RoadnetDoc = serde_json::from_str(&text)?;
    RoadNetwork::from_roadnet(&doc, vehicle_length, min_gap)
}

fn warn_unsupported(doc: &RoadnetDoc) {
    let mut keys = BTreeSet::new();
    keys.extend(doc.extra.keys().map(|k| k.to_string()));
    for i in &doc.intersections {
        keys.extend(i.extra.keys().map(|k| format!("intersections[].{k}")));
    }
    for r in &doc.roads {
        keys.extend(r.extra.keys().map(|k| format!("roads[].{k}")));
        for l in &r.lanes {
            keys.extend(l.extra.keys().map(|k| format!("roads[].lanes[].{k}")));
        }
    }
    for key in keys {
        log::warn!("roadnet field `{key}` is not supported and was ignored");
    }
}

fn heading_of(dx: f64, dy: f64) -> Option<Heading> {
    if dx == 0.0 && dy == 0.0 {
        return None;
    }
    Some(if dx.abs() >= dy.abs() {
        if dx > 0.0 {
            Heading::East
        } else {
            Heading::West
        }
    } else if dy > 0.0 {
        Heading::North
    } else {
        Heading::South
    })
}

impl RoadNetwork {
    pub fn from_roadnet(doc: &RoadnetDoc, vehicle_length: f64, min_gap: f64) -> Result<RoadNetwork, NetError> {
        warn_unsupported(doc);

        // signalized nodes row-major from the north-west, then boundary nodes
        let mut order: Vec<usize> = (0..doc.intersections.len())
            .filter(|&i| !doc.intersections[i].is_virtual)
            .collect();
        order.sort_by(|&a, &b| {
            let (pa, pb) = (&doc.intersections[a].point, &doc.intersections[b].point);
            pb.y.total_cmp(&pa.y).then(pa.x.total_cmp(&pb.x))
        });
        let real_count = order.len();
        order.extend((0..doc.intersections.len()).filter(|&i| doc.intersections[i].is_virtual));

        let grid = infer_grid(doc, &order[..real_count]);
        let mut rank_x: Vec<f64> = Vec::new();
        let mut rank_y: Vec<f64> = Vec::new();
        if grid.is_some() {
            for &i in &order[..real_count] {
                let p = &doc.intersections[i].point;
                if !rank_x.contains(&p.x) {
                    rank_x.push(p.x);
                }
                if !rank_y.contains(&p.y) {
                    rank_y.push(p.y);
                }
            }
            rank_x.sort_by(f64::total_cmp);
            rank_y.sort_by(|a, b| b.total_cmp(a));
        }

        let mut node_of: HashMap<&str, usize> = HashMap::new();
        let mut nodes = Vec::with_capacity(order.len());
        for (pos, &i) in order.iter().enumerate() {
            let d = &doc.intersections[i];
            if node_of.insert(d.id.as_str(), pos).is_some() {
                return Err(NetError::Roadnet(format!("duplicate intersection id {}", d.id)));
            }
            let grid_pos = (grid.is_some() && !d.is_virtual).then(|| {
                (
                    rank_y.iter().position(|&y| y == d.point.y).unwrap(),
                    rank_x.iter().position(|&x| x == d.point.x).unwrap(),
                )
            });
            nodes.push(NodeSpec {
                name: d.id.clone(),
                x: d.point.x,
                y: d.point.y,
                is_virtual: d.is_virtual,
                grid_pos,
            });
        }

        let mut roads = Vec::with_capacity(doc.roads.len());
        for r in &doc.roads {
            let lookup = |id: &str| {
                node_of
                    .get(id)
                    .copied()
                    .ok_or_else(|| NetError::Roadnet(format!("road {} references unknown intersection {id}", r.id)))
            };
            let from = lookup(&r.start)?;
            let to = lookup(&r.end)?;
            if nodes[from].is_virtual && nodes[to].is_virtual {
                log::warn!("road {} joins two virtual intersections and was ignored", r.id);
                continue;
            }
            if r.lanes.len() != LANES_PER_ROAD {
                return Err(NetError::Roadnet(format!(
                    "road {} has {} lanes; exactly {LANES_PER_ROAD} are supported",
                    r.id,
                    r.lanes.len()
                )));
            }
            let (start, end) = match (r.points.first(), r.points.last()) {
                (Some(a), Some(b)) if r.points.len() >= 2 => ((a.x, a.y), (b.x, b.y)),
                _ => ((nodes[from].x, nodes[from].y), (nodes[to].x, nodes[to].y)),
            };
            let heading = heading_of(end.0 - start.0, end.1 - start.1)
                .ok_or_else(|| NetError::Roadnet(format!("road {} has zero extent", r.id)))?;
            let length = match r.length {
                Some(l) => l,
                None if r.points.len() >= 2 => r
                    .points
                    .windows(2)
                    .map(|w| (w[1].x - w[0].x).hypot(w[1].y - w[0].y))
                    .sum(),
                None => (end.0 - start.0).hypot(end.1 - start.1),
            };
            let max_speed = r.lanes[0].max_speed;
            if r.lanes.iter().any(|l| l.max_speed != max_speed) {
                log::warn!("road {} has differing lane speeds; using {max_speed}", r.id);
            }
            roads.push(RoadSpec {
                name: r.id.clone(),
                from,
                to,
                heading,
                length,
                max_speed,
            });
        }

        assemble(nodes, roads, vehicle_length, min_gap, grid)
    }

    /// Exports the network in the roadnet file format.
    pub fn to_roadnet(&self) -> RoadnetDoc {
        let intersections = self
            .nodes
            .iter()
            .map(|n| IntersectionDoc {
                id: n.name.clone(),
                point: PointDoc { x: n.x, y: n.y },
                is_virtual: n.intersection.is_none(),
                roads: self
                    .roads
                    .iter()
                    .filter(|r| r.from == n.id || r.to == n.id)
                    .map(|r| r.name.clone())
                    .collect(),
                extra: BTreeMap::new(),
            })
            .collect();
        let roads = self
            .roads
            .iter()
            .map(|r| {
                let (a, b) = (&self.nodes[r.from.0], &self.nodes[r.to.0]);
                RoadDoc {
                    id: r.name.clone(),
                    start: a.name.clone(),
                    end: b.name.clone(),
                    points: vec![PointDoc { x: a.x, y: a.y }, PointDoc { x: b.x, y: b.y }],
                    lanes: r
                        .lanes
                        .iter()
                        .map(|&l| LaneDoc {
                            width: Some(3.0),
                            max_speed: self.lane(l).max_speed,
                            extra: BTreeMap::new(),
                        })
                        .collect(),
                    length: Some(r.length),
                    extra: BTreeMap::new(),
                }
            })
            .collect();
        RoadnetDoc {
            intersections,
            roads,
            extra: BTreeMap::new(),
        }
    }

    pub fn write_roadnet(&self, path: impl AsRef<Path>) -> Result<(), NetError> {
        let text = serde_json::to_string_pretty(&self.to_roadnet())?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

fn infer_grid(doc: &RoadnetDoc, real: &[usize]) -> Option<GridShape> {
    let mut xs: Vec<f64> = real.iter().map(|&i| doc.intersections[i].point.x).collect();
    let mut ys: Vec<f64> = real.iter().map(|&i| doc.intersections[i].point.y).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    (!real.is_empty() && xs.len() * ys.len() == real.len()).then_some(GridShape {
        rows: ys.len(),
        cols: xs.len(),
    })
}
