// Temporary diagnostic: is the imitation reward informative?
use eblaifo::ail_engine::*;
use eblaifo::harness::*;
use eblaifo::event_core::*;
use eblaifo::toy_world::*;
use eblaifo::rng::{stream, derive_seed};
use eblaifo::nn_core::Tensor;
use rand::Rng;
use std::path::Path;

fn main() {
    let cfg = ExperimentConfig {
        hyper: Hyperparams { batch_size: 32, update_every: 2, ..Default::default() },
        render_size: 16,
        seeds: vec![1],
        total_steps: 8000,
        eval_interval: 2000,
        demo_episodes: 30,
        ..Default::default()
    };
    // reuse demos from /tmp/pilot/demos
    let demos = Path::new("/tmp/pilot/demos");
    let hp = cfg.hyper;
    let domain = cfg.domain(DomainPreset::Source);
    let size = cfg.render_size as usize;
    let mut agent: AilAgent<f32> = AilAgent::new(2, size, size, 2, hp, &mut stream(3, "init", 0)).unwrap();
    // quick re-train 4000 steps inline replicating the loop is overkill; instead just
    // measure with the FRESH agent after training D on expert vs random for 300 rounds.
    let mut expert_buf = ReplayBuffer::new(usize::MAX, hp.stack_depth, true);
    // load expert demos
    for ep in 0..cfg.demo_episodes as usize {
        let dir = demos.join(format!("ep_{ep:03}"));
        let frames = eblaifo::frame_io::read_frame_sequence(&dir).unwrap();
        let mut prev = rgb_to_luminance(&frames[0]).unwrap();
        let mut stored = vec![];
        for (i, f) in frames[1..].iter().enumerate() {
            let lum = rgb_to_luminance(f).unwrap();
            stored.push(StoredFrame::Events(convert_pair(&lum, &prev, &cfg.codec, ep as u64, i as u64).unwrap()));
            prev = lum;
        }
        expert_buf.push_episode(Episode { frames: stored, actions: vec![], sparse: vec![] }).unwrap();
    }
    // agent buffer: mixture of random-policy and smooth scripted trajectories
    // (scripted in a random fixed direction, unit speed -- expert-like motion
    // statistics but no goal-seeking). If D can only see smoothness, these
    // negatives force it to find the next distinguishing feature.
    let mut agent_buf = ReplayBuffer::new(100000, hp.stack_depth, false);
    let mut rng = stream(3, "probe-act", 0);
    for ep in 0..60u64 {
        let mut state = reset(derive_seed(3, "probe-ep", ep));
        let mut prev = rgb_to_luminance(&render(&state, &domain)).unwrap();
        let (mut fs_, mut as_, mut sp_) = (vec![], vec![], vec![]);
        let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let smooth = ep % 2 == 1;
        for t in 0..100u64 {
            let a = if smooth {
                [theta.cos(), theta.sin()]
            } else {
                [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]
            };
            let (next, _, sparse, _) = step(&cfg.env, &state, a);
            state = next;
            let lum = rgb_to_luminance(&render(&state, &domain)).unwrap();
            fs_.push(StoredFrame::Events(convert_pair(&lum, &prev, &cfg.codec, 1000+ep, t).unwrap()));
            prev = lum;
            as_.push(a); sp_.push(sparse);
        }
        agent_buf.push_episode(Episode { frames: fs_, actions: as_, sparse: sp_ }).unwrap();
    }
    // train D (and critic, so encoder moves) for 3000 rounds
    let mut urng = stream(3, "probe-upd", 0);
    for i in 0..3000 {
        let eb = expert_buf.sample_pairs::<f32, _>(32, &mut urng).unwrap();
        let ab = agent_buf.sample_pairs::<f32, _>(32, &mut urng).unwrap();
        let dl = agent.update_discriminator((&eb.stack_t, &eb.stack_t1), (&ab.stack_t, &ab.stack_t1), &mut urng).unwrap();
        let b = agent_buf.sample_pairs::<f32, _>(32, &mut urng).unwrap();
        let sp = b.sparse.clone().map(|s| vec![s]);
        let (cl, _) = agent.update_critic(&[b.stack_t.clone(), b.stack_t1.clone()], b.actions.as_ref().unwrap(), sp.as_deref(), RewardMode::ImitationOnly, &mut urng).unwrap();
        if i % 500 == 0 { println!("round {i}: disc {dl:.3} critic {cl:.3}"); }
    }
    // measure: mean D on expert pairs vs random-agent pairs
    let mut d_exp = 0.0; let mut d_agt = 0.0;
    for _ in 0..10 {
        let eb = expert_buf.sample_pairs::<f32, _>(32, &mut urng).unwrap();
        let ab = agent_buf.sample_pairs::<f32, _>(32, &mut urng).unwrap();
        for (buf, acc) in [(&eb, &mut d_exp), (&ab, &mut d_agt)] {
            let z = agent.encoder.encode(&buf.stack_t).unwrap();
            let z1 = agent.encoder.encode(&buf.stack_t1).unwrap();
            let n = z.shape[0]; let zd = z.shape[1];
            let mut cat = vec![];
            for i in 0..n { cat.extend_from_slice(&z.data[i*zd..(i+1)*zd]); cat.extend_from_slice(&z1.data[i*zd..(i+1)*zd]); }
            let d = agent.disc.infer(&Tensor::from_vec(&[n, 2*zd], cat)).unwrap();
            *acc += d.data.iter().map(|v| *v as f64).sum::<f64>() / (n as f64 * 10.0);
        }
    }
    println!("mean D expert {d_exp:.3}  random-agent {d_agt:.3}");
    // reward along scripted reach-and-settle trajectories: settle at the goal
    // vs settle at the mirror-image point (same motion statistics, wrong place)
    for (name, dirsign) in [("toward", 1.0), ("away", -1.0)] {
        let mut total = 0.0;
        for ep in 0..5u64 {
            let mut state = reset(derive_seed(3, "probe-scripted", ep));
            let mut prev = rgb_to_luminance(&render(&state, &domain)).unwrap();
            let mut stack = ObsStack::new(hp.stack_depth, 2, size, size);
            let mut prev_z: Option<Tensor<f32>> = None;
            for t in 0..100u64 {
                let f = expert_features(&state);
                // PD controller toward goal (f = [dx, dy, vx, vy] with d = pos - goal)
                let a = [
                    (-f[0] * dirsign * 4.0 - f[2] * 2.0).clamp(-1.0, 1.0),
                    (-f[1] * dirsign * 4.0 - f[3] * 2.0).clamp(-1.0, 1.0),
                ];
                let (next, _, _, _) = step(&cfg.env, &state, a);
                state = next;
                let lum = rgb_to_luminance(&render(&state, &domain)).unwrap();
                stack.push(StoredFrame::Events(convert_pair(&lum, &prev, &cfg.codec, 5000+ep, t).unwrap()));
                prev = lum;
                let z = agent.encoder.encode(&stack.as_tensor::<f32>()).unwrap();
                if let Some(pz) = prev_z.take() {
                    let mut cat = pz.data.clone(); cat.extend_from_slice(&z.data);
                    let d = agent.disc.infer(&Tensor::from_vec(&[1, cat.len()], cat)).unwrap();
                    total += imitation_reward(d.data[0] as f64, hp.disc_clamp);
                }
                prev_z = Some(z);
            }
        }
        println!("mean imitation reward {name}-goal: {:.3}", total / (5.0*99.0));
    }
}
