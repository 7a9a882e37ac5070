use liftview::augment::AugmentConfig;
use liftview::camgeo::{orbit_eye, CameraSpec};
use liftview::liftsim::{reset, step, ObjectKind, SceneState, TaskConfig};
use liftview::nnet::ArchConfig;
use liftview::raster::EgoCamera;
use liftview::rig::{CameraRig, RigView};
use liftview::rng::child_rng;
use liftview::sac::{
    env_action, images_to_u8, policy_action, scripted_demo_transitions, train_teacher,
    FrontCameraMode, PolicyContext, SacConfig,
};
use std::time::Instant;

fn fixed_cam(az: f64, el: f64, r: f64) -> CameraSpec {
    let focus = [0.0, 0.02, 0.02];
    CameraSpec {
        eye: orbit_eye(focus, az, el, r),
        target: focus,
        up: [0.0, 0.0, 1.0],
        fov_deg: 55.0,
        aspect: 1.0,
        near: 0.05,
        far: 5.0,
    }
}

fn pilot_task() -> TaskConfig {
    let mut t = TaskConfig::default();
    t.episode_len = 32;
    t.pos_scale = 0.05;
    t.yaw_scale = 0.3;
    t.lift_height = 0.12;
    t
}

fn evaluate(
    params: &liftview::nnet::Params,
    rig: &CameraRig,
    task: &TaskConfig,
    kind: ObjectKind,
    trials: u32,
    seed: u64,
) -> f64 {
    let mut ctx = PolicyContext::new(params.arch());
    let mut ok = 0u32;
    for t in 0..trials {
        let mut env_rng = child_rng(seed, "eval-env", t as u64);
        let mut state: SceneState = reset(task, kind, &mut env_rng);
        let mut rng = child_rng(seed, "eval-act", t as u64);
        loop {
            let obs = rig.observe(&state, None).unwrap();
            let act = policy_action(params, &obs, None, false, &mut ctx, &mut rng).unwrap();
            let (next, _, done) = step(&state, &env_action(&act), task).unwrap();
            state = next;
            if done {
                break;
            }
        }
        ok += state.success_latched as u32;
    }
    ok as f64 / trials as f64
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let views: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(3);
    let kind = if args.get(2).map(|s| s.as_str()) == Some("mug") { ObjectKind::Mug } else { ObjectKind::Cube };
    let env_steps: u64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(2000);
    let pretrain: u32 = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(400);
    let batch: usize = args.get(5).map(|s| s.parse().unwrap()).unwrap_or(32);

    let task = pilot_task();
    let rig = match views {
        1 => CameraRig { views: vec![RigView::Fixed(fixed_cam(0.0, 30.0, 0.9))] },
        2 => CameraRig {
            views: vec![
                RigView::Ego(EgoCamera::default()),
                RigView::Fixed(fixed_cam(0.0, 30.0, 0.9)),
            ],
        },
        _ => CameraRig {
            views: vec![
                RigView::Ego(EgoCamera::default()),
                RigView::Fixed(fixed_cam(0.0, 30.0, 0.9)),
                RigView::Fixed(fixed_cam(90.0, 35.0, 0.9)),
            ],
        },
    };
    let arch = ArchConfig::new(views, false);
    let mut sac = SacConfig::default();
    sac.batch_size = batch;
    sac.train_env_steps = env_steps;
    sac.pretrain_updates = pretrain;
    sac.buffer_capacity = 50_000;

    let t0 = Instant::now();
    let demos = scripted_demo_transitions(&task, kind, &rig, 50, 777, false).unwrap();
    eprintln!("demos: {} transitions in {:.1}s", demos.len(), t0.elapsed().as_secs_f64());

    let aug = AugmentConfig::default();
    let t1 = Instant::now();
    let run = train_teacher(
        &task, kind, &rig, &demos, &aug, arch, sac, &FrontCameraMode::Fixed, 42, None, None,
        |rec| {
            eprintln!(
                "ep {:3} steps {:5} ret {:7.1} success {} closs {:.4} aloss {:.4} alpha {:.4} [{:.0}s]",
                rec.episode, rec.env_steps, rec.ret, rec.success as u8, rec.critic_loss,
                rec.actor_loss, rec.alpha, t1.elapsed().as_secs_f64()
            );
        },
    )
    .unwrap();
    eprintln!("train done in {:.1}s", t1.elapsed().as_secs_f64());
    let sr = evaluate(&run.params, &rig, &task, kind, 50, 999);
    let _ = images_to_u8;
    println!("PILOT views={views} kind={kind:?} steps={env_steps} -> fixed eval success {sr:.2}");
}
