use serde::Serialize;
use wasm_bindgen::prelude::*;
use wbp_core::pipeline::{plan, plan_svg, trial_request, world_svg, BenchmarkSpec, PlanReport, PlanRequest, PlannerConfig, Trial};
use wbp_core::robot::RobotModel;
use wbp_core::world::World;

/// Outcome of one planning call, as shown on the page.
#[derive(Debug, Serialize)]
pub struct Summary {
    pub status: String,
    pub candidates: usize,
    pub best_candidate: Option<usize>,
    pub duration: Option<f64>,
    pub objective: Option<f64>,
    pub message: Option<String>,
}

/// A random desk-scale room with a start and goal pose.
#[wasm_bindgen]
pub struct Demo {
    world: World,
    request: PlanRequest,
    robot: RobotModel,
    cfg: PlannerConfig,
    report: Option<PlanReport>,
}

impl Demo {
    pub fn build(seed: u32) -> Result<Demo, String> {
        let robot = RobotModel::default_mobile_manipulator();
        let cfg = PlannerConfig::default();
        let spec = BenchmarkSpec::desk_scale(1, seed as u64);
        let Trial { world, request, .. } =
            trial_request(&spec, 0, 0, &robot, &cfg).map_err(|stage| format!("room {seed}: {stage} failed"))?;
        Ok(Demo { world, request, robot, cfg, report: None })
    }

    pub fn run(&mut self, seed: u32) -> Result<Summary, String> {
        self.request.seed = seed as u64;
        let r = plan(&self.request, &self.world, &self.robot, &self.cfg).map_err(|e| e.to_string())?;
        let status = serde_json::to_value(r.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        let s = Summary {
            status,
            candidates: r.candidates.len(),
            best_candidate: r.best_candidate,
            duration: r.total_duration,
            objective: r.objective,
            message: r.message.clone(),
        };
        self.report = Some(r);
        Ok(s)
    }
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32) -> Result<Demo, JsError> {
        Demo::build(seed).map_err(|e| JsError::new(&e))
    }

    /// Plans from start to goal and returns a JSON summary.
    pub fn plan(&mut self, seed: u32) -> Result<String, JsError> {
        let s = self.run(seed).map_err(|e| JsError::new(&e))?;
        serde_json::to_string(&s).map_err(|e| JsError::new(&e.to_string()))
    }

    /// Room drawing, with the last plan when there is one.
    pub fn svg(&self) -> String {
        match &self.report {
            Some(r) => plan_svg(&self.world, &self.request, r, &self.cfg),
            None => {
                let s = &self.request.start.state;
                let mut c = world_svg(&self.world);
                c.circle([s.x, s.y], 0.15, "#16a34a");
                if let Some(g) = self.request.base_goal {
                    c.circle(g, 0.15, "#dc2626");
                }
                c.finish()
            }
        }
    }

    /// `[xmin, ymin, xmax, ymax]` of the drawing in meters.
    pub fn bounds(&self) -> Vec<f64> {
        self.world.esdf.bounds().to_vec()
    }

    /// Base clearance at `(x, y)`, negative inside inflated obstacles.
    pub fn clearance(&self, x: f64, y: f64) -> f64 {
        self.world.esdf.query([x, y]).distance
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn room_plan_and_drawing() {
        let mut d = Demo::build(3).unwrap();
        let before = d.svg();
        assert!(before.starts_with("<svg") && before.contains("<circle"));
        let s = d.run(1).unwrap();
        assert_eq!(s.status, "success", "{s:?}");
        assert!(s.duration.is_some_and(|t| t > 0.0));
        assert!(d.svg().len() > before.len());
        let b = d.bounds();
        let st = &d.request.start.state;
        assert!(d.clearance(st.x, st.y) > 0.0);
        assert!(d.clearance(b[0] + 0.05, b[1] + 0.05) < 0.0);
    }
}
