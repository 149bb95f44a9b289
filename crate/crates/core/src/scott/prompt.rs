use std::fmt::Write;

use crate::focus::FocusArea;
use crate::grid::{CellIndex, GridMap};
use crate::planner::PlanRequest;

/// Marker placed in the text where the heatmap image is attached.
pub const IMAGE_MARKER: &str = "[image: heatmap.png]";

/// Per-stage fields of a subtask prompt.
#[derive(Clone, Copy, Debug)]
pub enum Subtask<'a> {
    CoarsePath,
    FocusAreas {
        coarse_path: &'a [CellIndex],
        n_areas: usize,
        max_distance: f64,
    },
    Refine {
        index: usize,
        count: usize,
        area: &'a FocusArea,
        from: [f64; 2],
        to: [f64; 2],
    },
}

impl Subtask<'_> {
    pub fn stage(&self) -> u8 {
        match self {
            Subtask::CoarsePath => 1,
            Subtask::FocusAreas { .. } => 2,
            Subtask::Refine { .. } => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RenderedPrompt {
    pub stage: u8,
    pub text: String,
    pub attach_image: bool,
    /// Cells whose gain data the prompt carries (stage 3 only).
    pub data_cells: Vec<CellIndex>,
}

impl RenderedPrompt {
    /// The same prompt with a one-line note on why the previous reply was
    /// rejected.
    pub fn with_feedback(&self, summary: &str) -> RenderedPrompt {
        let mut out = self.clone();
        let line = summary.replace('\n', " ");
        let _ = writeln!(out.text, "<Feedback>Your previous reply was rejected: {line}. Correct it and answer again.</Feedback>");
        out
    }
}

fn xy(p: [f64; 2]) -> String {
    format!("({}, {})", p[0], p[1])
}

fn header(map: &GridMap, request: &PlanRequest, subtask: &str) -> String {
    let [ox, oy] = map.origin();
    format!(
        "<Task>Wireless-aware path planning for a mobile robot, subtask {subtask}.</Task>\n\
         <Context>\n\
         Grid: {} x {} cells of {} m. Cell (0, 0) is centered at ({ox}, {oy}) m; x grows east, y grows north.\n\
         Start: {} m. Goal: {} m.\n\
         Average path gain threshold G = {}: the mean normalized path gain over all waypoints of the final path must be at least {}.\n\
         We define forbidden zones (e.g., obstacles in white) that must be avoided.\n",
        map.width(),
        map.height(),
        map.cell_size(),
        xy(map.cell_center(request.start)),
        xy(map.cell_center(request.goal)),
        request.threshold,
        request.threshold,
    )
}

const IMAGE_NOTE: &str = "The attached image is a bird's-eye view of the grid map, north up, overlaid with a \
color-coded wireless path gain heatmap: blue cells have high gain (> 0.8), orange and red cells have low gain \
(< 0.5), white cells are forbidden zones.";

fn output_block(key: &str, what: &str) -> String {
    format!(
        "<Output>\n\
         First explain your decisions in a few sentences. Then end the reply with exactly one fenced JSON block \
         holding {what} as world coordinates in meters:\n\
         ```json\n{{\"{key}\": [[x, y], ...]}}\n```\n\
         </Output>\n"
    )
}

/// Renders the fixed template of a subtask.
pub fn render_subtask_prompt(map: &GridMap, request: &PlanRequest, subtask: &Subtask<'_>) -> RenderedPrompt {
    let stage = subtask.stage();
    match *subtask {
        Subtask::CoarsePath => {
            let mut text = header(map, request, "1 of 3: coarse path");
            let _ = writeln!(text, "{IMAGE_MARKER} {IMAGE_NOTE}\n</Context>");
            text.push_str(
                "<Workflow>\n\
                 1. Locate the start and the goal on the image.\n\
                 2. Find high-gain corridors that connect them without entering forbidden zones.\n\
                 3. Propose a coarse sequence of waypoints from start to goal through those corridors.\n\
                 </Workflow>\n\
                 <Reasoning Strategy>\n\
                 Prefer blue regions over short cuts through orange or red ones. A longer route is acceptable when \
                 it keeps the average gain at or above G. Never place a waypoint in a forbidden zone.\n\
                 </Reasoning Strategy>\n",
            );
            text.push_str(&output_block("waypoints", "the coarse waypoints from start to goal"));
            RenderedPrompt { stage, text, attach_image: true, data_cells: Vec::new() }
        }
        Subtask::FocusAreas { coarse_path, n_areas, max_distance } => {
            let mut text = header(map, request, "2 of 3: focus areas");
            let _ = writeln!(text, "{IMAGE_MARKER} {IMAGE_NOTE}");
            let coarse: Vec<String> = coarse_path.iter().map(|&c| xy(map.cell_center(c))).collect();
            let _ = writeln!(text, "Coarse path from subtask 1: {}\n</Context>", coarse.join(", "));
            let _ = write!(
                text,
                "<Workflow>\n\
                 1. Walk along the coarse path from start to goal.\n\
                 2. Select N = {n_areas} focus areas. Each is a circle of radius max_distance = {max_distance} m \
                 around a center you choose.\n\
                 3. Together the areas must contain the start, the goal and the corridor the final path will use.\n\
                 </Workflow>\n\
                 <Reasoning Strategy>\n\
                 Place centers where the route turns or where the gain changes, and list them in travel order \
                 from start to goal. Keep forbidden zones out of the corridor.\n\
                 </Reasoning Strategy>\n"
            );
            text.push_str(&output_block("centers", "the focus-area centers in travel order"));
            RenderedPrompt { stage, text, attach_image: true, data_cells: Vec::new() }
        }
        Subtask::Refine { index, count, area, from, to } => {
            let mut text = header(map, request, "3 of 3: fine-grained refinement");
            let _ = writeln!(
                text,
                "Focus area {} of {count}: center {} m, radius {} m.\n\
                 Enter the area near {} m and leave it toward {} m.\n\
                 The data block lists every traversable cell of this area as [x, y, gain]; cells not listed are \
                 forbidden or outside the area.\n\
                 <Data>",
                index + 1,
                xy(area.center()),
                area.radius(),
                xy(from),
                xy(to),
            );
            let cells: Vec<String> = area
                .members()
                .iter()
                .map(|&c| {
                    let [x, y] = map.cell_center(c);
                    format!("[{x},{y},{}]", map.gain(c))
                })
                .collect();
            let _ = writeln!(text, "[{}]\n</Data>\n</Context>", cells.join(","));
            text.push_str(
                "<Workflow>\n\
                 1. Read the gain of the listed cells.\n\
                 2. Chain adjacent cell centers (8-connected, no diagonal step past a forbidden corner) through \
                 this area from the entry toward the exit.\n\
                 3. Check that the running average gain can still reach G.\n\
                 </Workflow>\n\
                 <Reasoning Strategy>\n\
                 Trade a few extra steps for cells with higher gain whenever the average would otherwise fall \
                 below G. Use only listed cells.\n\
                 </Reasoning Strategy>\n",
            );
            text.push_str(&output_block("waypoints", "the cell centers of this area's path segment"));
            RenderedPrompt { stage, text, attach_image: false, data_cells: area.members().to_vec() }
        }
    }
}

/// Parses the `<Data>` block of a stage-3 prompt back into `[x, y, gain]`
/// triples.
pub fn prompt_data(text: &str) -> Option<Vec<[f64; 3]>> {
    let start = text.find("<Data>")? + "<Data>".len();
    let end = text[start..].find("</Data>")? + start;
    serde_json::from_str(text[start..end].trim()).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (GridMap, PlanRequest) {
        let map = GridMap::from_tenths(6, 6, 0.5, [1.0, 2.0], (0..36).map(|i| (i % 11) as u8).collect(), vec![false; 36]).unwrap();
        (map, PlanRequest::new(CellIndex::new(0, 0), CellIndex::new(5, 5), 0.65))
    }

    #[test]
    fn stage_one_fields() {
        let (map, req) = setup();
        let p = render_subtask_prompt(&map, &req, &Subtask::CoarsePath);
        assert!(p.attach_image);
        assert!(p.text.contains(IMAGE_MARKER));
        assert!(p.text.contains("G = 0.65"));
        assert!(p.text.contains("forbidden zones (e.g., obstacles in white) that must be avoided"));
        assert!(p.text.contains("<Workflow>") && p.text.contains("<Reasoning Strategy>"));
        assert!(p.text.contains("```json"));
    }

    #[test]
    fn stage_two_carries_n_and_radius() {
        let (map, req) = setup();
        let coarse = [CellIndex::new(0, 0), CellIndex::new(5, 5)];
        let p = render_subtask_prompt(&map, &req, &Subtask::FocusAreas { coarse_path: &coarse, n_areas: 6, max_distance: 1.25 });
        assert!(p.text.contains("N = 6"));
        assert!(p.text.contains("max_distance = 1.25 m"));
        assert!(p.text.contains("(3.5, 4.5)"));
    }

    #[test]
    fn stage_three_payload_is_the_area_slice() {
        let (map, req) = setup();
        let area = FocusArea::new(&map, [2.0, 3.0], 0.8);
        let p = render_subtask_prompt(
            &map,
            &req,
            &Subtask::Refine { index: 1, count: 3, area: &area, from: [1.0, 2.0], to: [3.5, 4.5] },
        );
        assert!(!p.attach_image);
        let data = prompt_data(&p.text).unwrap();
        let slice = map.slice_region([2.0, 3.0], 0.8);
        assert_eq!(data.len(), slice.len());
        for ((c, g), d) in slice.iter().zip(&data) {
            assert_eq!(map.cell_center(*c), [d[0], d[1]]);
            assert_eq!(*g, d[2]);
        }
        assert_eq!(p.data_cells, slice.iter().map(|(c, _)| *c).collect::<Vec<_>>());
    }

    #[test]
    fn feedback_is_one_line() {
        let (map, req) = setup();
        let p = render_subtask_prompt(&map, &req, &Subtask::CoarsePath);
        let f = p.with_feedback("cell (1, 1) is an obstacle\nsecond");
        assert!(f.text.starts_with(&p.text));
        assert_eq!(f.text.lines().count(), p.text.lines().count() + 1);
    }
}
