//! Camera rig: the ordered set of views a policy observes. The egocentric
//! view tracks the gripper; fixed views are world-frame cameras. View order
//! is the encoder's channel order: egocentric first, then third-person views
//! by index.

use crate::camgeo::CameraSpec;
use crate::error::Result;
use crate::liftsim::SceneState;
use crate::raster::{egocentric_camera, render, EgoCamera, Image, OBS_HEIGHT, OBS_WIDTH};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RigView {
    Ego(EgoCamera),
    Fixed(CameraSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraRig {
    pub views: Vec<RigView>,
}

impl CameraRig {
    pub fn view_count(&self) -> usize {
        self.views.len()
    }

    /// Index of the front third-person camera: the view that evaluation
    /// replaces in random-view mode. By construction this is the first
    /// fixed view.
    pub fn front_index(&self) -> usize {
        self.views
            .iter()
            .position(|v| matches!(v, RigView::Fixed(_)))
            .expect("rig has no fixed view")
    }

    pub fn camera_for(&self, view: &RigView, state: &SceneState) -> CameraSpec {
        match view {
            RigView::Ego(ego) => egocentric_camera(state, ego),
            RigView::Fixed(cam) => *cam,
        }
    }

    /// Render every view of `state`, optionally overriding the front camera.
    pub fn observe(&self, state: &SceneState, front_override: Option<&CameraSpec>) -> Result<Vec<Image>> {
        let front = self.front_index();
        let mut out = Vec::with_capacity(self.views.len());
        for (i, view) in self.views.iter().enumerate() {
            let cam = match (front_override, i == front) {
                (Some(c), true) => *c,
                _ => self.camera_for(view, state),
            };
            out.push(render(state, &cam, OBS_WIDTH, OBS_HEIGHT)?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camgeo::orbit_eye;
    use crate::liftsim::{reset, ObjectKind, TaskConfig};
    use crate::rng::child_rng;

    fn front_cam() -> CameraSpec {
        CameraSpec {
            eye: orbit_eye([0.0, 0.02, 0.02], 0.0, 30.0, 0.9),
            target: [0.0, 0.02, 0.02],
            up: [0.0, 0.0, 1.0],
            fov_deg: 55.0,
            aspect: 1.0,
            near: 0.05,
            far: 5.0,
        }
    }

    #[test]
    fn observe_respects_view_order_and_override() {
        let rig = CameraRig {
            views: vec![RigView::Ego(EgoCamera::default()), RigView::Fixed(front_cam())],
        };
        assert_eq!(rig.front_index(), 1);
        let state = reset(&TaskConfig::default(), ObjectKind::Cube, &mut child_rng(0, "env", 0));
        let base = rig.observe(&state, None).unwrap();
        assert_eq!(base.len(), 2);
        let mut moved = front_cam();
        moved.eye = orbit_eye([0.0, 0.02, 0.02], 40.0, 45.0, 0.9);
        let swapped = rig.observe(&state, Some(&moved)).unwrap();
        assert_eq!(base[0].data, swapped[0].data, "ego view unaffected by override");
        assert_ne!(base[1].data, swapped[1].data, "front view must change");
    }
}
