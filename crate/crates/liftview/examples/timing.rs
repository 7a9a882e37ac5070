use liftview::nnet::*;
use liftview::rng::child_rng;
use rand::Rng;
use std::time::Instant;

fn main() {
    for views in [1usize, 3] {
        let arch = ArchConfig::new(views, false);
        let params = Params::init(Layout::new(arch), &mut child_rng(0, "init", 0));
        let mut tape = EncoderTape::new(&arch);
        let mut scratch = EncScratch::new(&arch);
        let mut rng = child_rng(1, "in", 0);
        let input: Vec<f32> = (0..arch.input_channels() * 84 * 84).map(|_| rng.random_range(0.0..1.0)).collect();
        // warmup
        encoder_forward(&params, &input, &mut tape, &mut scratch);
        let n = 20;
        let t0 = Instant::now();
        for _ in 0..n {
            encoder_forward(&params, &input, &mut tape, &mut scratch);
        }
        let fwd = t0.elapsed().as_secs_f64() / n as f64;
        let dfeat = vec![0.01f32; arch.feature_dim];
        let mut grad = vec![0.0f32; params.layout.total];
        let t1 = Instant::now();
        for _ in 0..n {
            encoder_forward(&params, &input, &mut tape, &mut scratch);
            encoder_backward(&params, &tape, &dfeat, &mut grad, &mut scratch);
        }
        let fwdbwd = t1.elapsed().as_secs_f64() / n as f64;
        println!("views={views}: fwd {:.2} ms, fwd+bwd {:.2} ms", fwd * 1e3, fwdbwd * 1e3);
    }
}
