use super::assemble::{assemble, NodeSpec, RoadSpec};
use super::*;

/// Builds a `rows × cols` grid of four-leg intersections. `rows` counts the
/// west–east roads and `cols` the north–south roads. Every boundary leg gets
/// an entry road and an exit road of the same length as the interior links.
///
/// Node and road names follow the usual CityFlow grid convention
/// (`intersection_{x}_{y}`, `road_{x}_{y}_{dir}`), with `x` counted from the
/// west edge, `y` from the south edge and boundary nodes at index 0 and
/// `cols + 1` / `rows + 1`.
pub fn build_grid(
    rows: usize,
    cols: usize,
    we_length: f64,
    ns_length: f64,
    vehicle_length: f64,
    min_gap: f64,
    max_speed: f64,
) -> Result<RoadNetwork, NetError> {
    if rows == 0 || cols == 0 {
        return Err(NetError::InvalidDimension(format!("{rows}x{cols} grid")));
    }
    for (name, v) in [
        ("we_length", we_length),
        ("ns_length", ns_length),
        ("vehicle_length", vehicle_length),
        ("min_gap", min_gap),
        ("max_speed", max_speed),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(NetError::InvalidDimension(format!("{name} = {v}")));
        }
    }

    let mut nodes = Vec::new();
    let mut index = std::collections::HashMap::new();
    let mut push = |nodes: &mut Vec<NodeSpec>, x: usize, y: usize, is_virtual: bool| {
        let grid_pos = (!is_virtual).then(|| (rows - y, x - 1));
        index.insert((x, y), nodes.len());
        nodes.push(NodeSpec {
            name: format!("intersection_{x}_{y}"),
            x: x as f64 * we_length,
            y: y as f64 * ns_length,
            is_virtual,
            grid_pos,
        });
    };
    for y in (1..=rows).rev() {
        for x in 1..=cols {
            push(&mut nodes, x, y, false);
        }
    }
    for y in (1..=rows).rev() {
        push(&mut nodes, 0, y, true);
        push(&mut nodes, cols + 1, y, true);
    }
    for x in 1..=cols {
        push(&mut nodes, x, rows + 1, true);
        push(&mut nodes, x, 0, true);
    }

    let step = |x: usize, y: usize, h: Heading| -> (usize, usize) {
        match h {
            Heading::East => (x + 1, y),
            Heading::North => (x, y + 1),
            Heading::West => (x - 1, y),
            Heading::South => (x, y - 1),
        }
    };
    let length_of = |h: Heading| if h.is_horizontal() { we_length } else { ns_length };

    let mut roads = Vec::new();
    let mut road = |x: usize, y: usize, h: Heading| {
        let (nx, ny) = step(x, y, h);
        roads.push(RoadSpec {
            name: format!("road_{x}_{y}_{}", h.index()),
            from: index[&(x, y)],
            to: index[&(nx, ny)],
            heading: h,
            length: length_of(h),
            max_speed,
        });
    };
    for y in (1..=rows).rev() {
        for x in 1..=cols {
            for h in Heading::ALL {
                road(x, y, h);
            }
        }
    }
    for y in (1..=rows).rev() {
        road(0, y, Heading::East);
        road(cols + 1, y, Heading::West);
    }
    for x in 1..=cols {
        road(x, rows + 1, Heading::South);
        road(x, 0, Heading::North);
    }

    assemble(nodes, roads, vehicle_length, min_gap, Some(GridShape { rows, cols }))
}

#[cfg(test)]
mod tests {
    use super::*;

    const V: f64 = 40.0 / 3.6;

    #[test]
    fn three_by_three() {
        let net = build_grid(3, 3, 300.0, 300.0, 5.0, 2.5, V).unwrap();
        assert_eq!(net.intersections.len(), 9);
        let entries = net.entry_roads();
        assert_eq!(entries.len(), 12);
        for side in Compass::ALL {
            assert_eq!(entries.iter().filter(|(_, s)| *s == side).count(), 3);
        }
        assert!(net.lanes.iter().all(|l| l.capacity == 40));
        assert_eq!(net.boundary_exits.len(), 12 * 3);
        assert!(net.validate().is_ok());
    }

    #[test]
    fn single_intersection() {
        let net = build_grid(1, 1, 300.0, 300.0, 5.0, 2.5, V).unwrap();
        assert_eq!(net.intersections.len(), 1);
        assert_eq!(net.entry_roads().len(), 4);
    }

    #[test]
    fn hangzhou_shape_capacities() {
        let net = build_grid(4, 4, 800.0, 600.0, 5.0, 2.5, V).unwrap();
        assert_eq!(net.intersections.len(), 16);
        for road in &net.roads {
            let want = if road.heading.is_horizontal() { 106 } else { 80 };
            for &lane in &road.lanes {
                assert_eq!(net.lane(lane).capacity, want, "{}", road.name);
            }
        }
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(build_grid(0, 3, 300.0, 300.0, 5.0, 2.5, V).is_err());
        assert!(build_grid(3, 0, 300.0, 300.0, 5.0, 2.5, V).is_err());
        assert!(build_grid(3, 3, 0.0, 300.0, 5.0, 2.5, V).is_err());
        assert!(build_grid(3, 3, 300.0, -1.0, 5.0, 2.5, V).is_err());
    }

    #[test]
    fn straight_chain_crosses_the_grid() {
        let net = build_grid(3, 3, 300.0, 300.0, 5.0, 2.5, V).unwrap();
        // west edge, top row: three straight movements then an exit lane
        let (entry, _) = net
            .entry_roads()
            .into_iter()
            .find(|(_, s)| *s == Compass::West)
            .unwrap();
        let mut lane = net.road(entry).lanes[Turn::Straight.index()];
        let mut hops = 0;
        while let Some(m) = net.movement_from_lane(lane) {
            let mv = net.movement(m);
            assert_eq!(mv.approach, Compass::West);
            lane = mv.out_lane;
            hops += 1;
        }
        assert_eq!(hops, 3);
        assert!(net.is_exit_lane(lane));
    }
}
