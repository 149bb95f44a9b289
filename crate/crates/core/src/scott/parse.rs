use serde_json::Value;

use crate::grid::{CellIndex, GridMap};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("no fenced JSON block in reply")]
    NoBlock,
    #[error("fenced block is not valid JSON: {0}")]
    Json(String),
    #[error("unexpected schema: {0}")]
    Schema(String),
    #[error("waypoint list is empty")]
    Empty,
    #[error("points with no traversable cell center within half a cell diagonal: {}", fmt_points(.0))]
    Unsnappable(Vec<[f64; 2]>),
    #[error("points outside the grid: {}", fmt_points(.0))]
    OutOfGrid(Vec<[f64; 2]>),
}

fn fmt_points(points: &[[f64; 2]]) -> String {
    points.iter().map(|p| format!("({}, {})", p[0], p[1])).collect::<Vec<_>>().join(", ")
}

/// Contents of the last ``` fenced block. An info string on the opening
/// fence (`json`) is dropped.
pub fn last_fenced_block(raw: &str) -> Option<&str> {
    let mut blocks = Vec::new();
    let mut rest = raw;
    let mut offset = 0;
    while let Some(open) = rest.find("```") {
        let after_open = open + 3;
        let Some(close) = rest[after_open..].find("```") else { break };
        let inner = &raw[offset + after_open..offset + after_open + close];
        blocks.push(inner);
        let consumed = after_open + close + 3;
        offset += consumed;
        rest = &rest[consumed..];
    }
    let block = blocks.pop()?;
    let body = match block.find('\n') {
        Some(nl) if !block[..nl].trim_start().starts_with(['[', '{']) => &block[nl + 1..],
        _ => block,
    };
    Some(body.trim())
}

/// World-coordinate points from the last fenced block: either a bare
/// `[[x, y], ...]` array or an object holding one under `key`.
pub fn parse_points(raw: &str, key: &str) -> Result<Vec<[f64; 2]>, ParseError> {
    let block = last_fenced_block(raw).ok_or(ParseError::NoBlock)?;
    let value: Value = serde_json::from_str(block).map_err(|e| ParseError::Json(e.to_string()))?;
    let list = match &value {
        Value::Array(_) => &value,
        Value::Object(obj) => obj
            .get(key)
            .ok_or_else(|| ParseError::Schema(format!("object has no `{key}` field")))?,
        _ => return Err(ParseError::Schema("expected an array or an object".into())),
    };
    let items = list
        .as_array()
        .ok_or_else(|| ParseError::Schema(format!("`{key}` is not an array")))?;
    if items.is_empty() {
        return Err(ParseError::Empty);
    }
    items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let pair = item.as_array().filter(|a| a.len() == 2);
            let xy = pair.and_then(|a| Some([a[0].as_f64()?, a[1].as_f64()?]));
            xy.ok_or_else(|| ParseError::Schema(format!("item {i} is not an [x, y] number pair")))
        })
        .collect()
}

/// Waypoints of a model reply, snapped to traversable cell centers.
pub fn parse_waypoint_reply(map: &GridMap, raw: &str) -> Result<Vec<CellIndex>, ParseError> {
    let points = parse_points(raw, "waypoints")?;
    let mut cells = Vec::with_capacity(points.len());
    let mut bad = Vec::new();
    for p in points {
        match map.snap(p) {
            Some(c) => cells.push(c),
            None => bad.push(p),
        }
    }
    if bad.is_empty() {
        Ok(cells)
    } else {
        Err(ParseError::Unsnappable(bad))
    }
}

/// Focus-area centers of a stage-2 reply; every center must lie on the grid.
pub fn parse_centers_reply(map: &GridMap, raw: &str) -> Result<Vec<[f64; 2]>, ParseError> {
    let points = parse_points(raw, "centers")?;
    let outside: Vec<[f64; 2]> = points.iter().copied().filter(|&p| map.world_to_cell(p).is_err()).collect();
    if outside.is_empty() {
        Ok(points)
    } else {
        Err(ParseError::OutOfGrid(outside))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map() -> GridMap {
        let mut obstacles = vec![false; 25];
        obstacles[12] = true; // (2, 2)
        GridMap::from_tenths(5, 5, 2.0, [10.0, 20.0], vec![5; 25], obstacles).unwrap()
    }

    #[test]
    fn prose_then_block() {
        let raw = "I route along the blue band.\n```json\n[[10.0, 20.0], [12.0, 22.0]]\n```\n";
        assert_eq!(
            parse_waypoint_reply(&map(), raw).unwrap(),
            vec![CellIndex::new(0, 0), CellIndex::new(1, 1)]
        );
    }

    #[test]
    fn last_block_wins_and_object_form() {
        let raw = "draft:\n```\n[[10, 20]]\n```\nfinal:\n```json\n{\"waypoints\": [[14, 20]]}\n```";
        assert_eq!(parse_waypoint_reply(&map(), raw).unwrap(), vec![CellIndex::new(2, 0)]);
        assert_eq!(last_fenced_block("```[1]```"), Some("[1]"));
    }

    #[test]
    fn snaps_within_tolerance() {
        // 0.4 cell off the (1, 0) center
        let raw = "```json\n[[12.8, 20.0]]\n```";
        assert_eq!(parse_waypoint_reply(&map(), raw).unwrap(), vec![CellIndex::new(1, 0)]);
    }

    #[test]
    fn obstacle_point_is_named() {
        let raw = "```json\n[[10, 20], [14, 24]]\n```";
        match parse_waypoint_reply(&map(), raw) {
            Err(ParseError::Unsnappable(pts)) => assert_eq!(pts, vec![[14.0, 24.0]]),
            other => panic!("{other:?}"),
        }
        let msg = parse_waypoint_reply(&map(), raw).unwrap_err().to_string();
        assert!(msg.contains("(14, 24)"), "{msg}");
    }

    #[test]
    fn failures() {
        let m = map();
        assert_eq!(parse_waypoint_reply(&m, "no block"), Err(ParseError::NoBlock));
        assert!(matches!(parse_waypoint_reply(&m, "```json\n[[1,2\n```"), Err(ParseError::Json(_))));
        assert_eq!(parse_waypoint_reply(&m, "```json\n[]\n```"), Err(ParseError::Empty));
        assert!(matches!(parse_waypoint_reply(&m, "```json\n{\"path\": []}\n```"), Err(ParseError::Schema(_))));
        assert!(matches!(parse_waypoint_reply(&m, "```json\n[[1, \"a\"]]\n```"), Err(ParseError::Schema(_))));
        assert!(matches!(parse_centers_reply(&m, "```json\n[[100, 100]]\n```"), Err(ParseError::OutOfGrid(_))));
        assert_eq!(parse_centers_reply(&m, "```json\n{\"centers\": [[11, 21]]}\n```").unwrap(), vec![[11.0, 21.0]]);
    }
}
