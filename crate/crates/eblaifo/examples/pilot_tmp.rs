use eblaifo::ail_engine::{Hyperparams, RewardMode};
use rand::Rng as _;
use eblaifo::harness::*;
use eblaifo::toy_world::EnvConfig;
use std::path::Path;

fn base_cfg(steps: u32) -> ExperimentConfig {
    ExperimentConfig {
        env: EnvConfig::default(),
        hyper: Hyperparams { batch_size: 32, update_every: 2, warmup_steps: 1000, ..Default::default() },
        render_size: 18,
        seeds: vec![1],
        total_steps: steps,
        eval_interval: 1000,
        eval_episodes: 10,
        demo_episodes: 30,
        expert_steps: 12_000,
        ..Default::default()
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    match args[1].as_str() {
        "expert" => {
            let cfg = base_cfg(10_000);
            let t0 = std::time::Instant::now();
            let actor = train_expert(&cfg, 1).unwrap();
            let stats = evaluate_expert(&cfg, &actor, 99, 20).unwrap();
            let sparse = expert_sparse_return(&cfg, &actor, 99, 20).unwrap();
            println!("expert in {:?}: dense {:.2} touch {:.2} sparse {:.2}", t0.elapsed(), stats.mean_dense_return, stats.success_rate, sparse);
            eblaifo::nn_core::save_params(&actor, Path::new("/tmp/pilot/expert_small.ckpt")).unwrap();
            let t0 = std::time::Instant::now();
            record_demos(&cfg, &actor, 0, Path::new("/tmp/pilot/demos")).unwrap();
            println!("demos in {:?}", t0.elapsed());
        }
        "grid" => {
            // grid <name> <steps> key=val ...
            let name = &args[2];
            let steps: u32 = args[3].parse().unwrap();
            let mut cfg = base_cfg(steps);
            let mut seed = 1u64;
            for kv in &args[4..] {
                let (k, v) = kv.split_once('=').unwrap();
                match k {
                    "batch" => cfg.hyper.batch_size = v.parse().unwrap(),
                    "ue" => cfg.hyper.update_every = v.parse().unwrap(),
                    "zdim" => cfg.hyper.z_dim = v.parse().unwrap(),
                    "nstep" => cfg.hyper.nstep = v.parse().unwrap(),
                    "clr" => cfg.hyper.critic_lr = v.parse().unwrap(),
                    "alr" => cfg.hyper.actor_lr = v.parse().unwrap(),
                    "dlr" => cfg.hyper.disc_lr = v.parse().unwrap(),
                    "sigma" => cfg.hyper.explore_sigma = v.parse().unwrap(),
                    "clip" => cfg.hyper.noise_clip = v.parse().unwrap(),
                    "warmup" => cfg.hyper.warmup_steps = v.parse().unwrap(),
                    "gamma" => cfg.hyper.gamma = v.parse().unwrap(),
                    "gp" => cfg.hyper.lambda_gp = v.parse().unwrap(),
                    "mode" => cfg.reward_mode = if v == "imit" { RewardMode::ImitationOnly } else { RewardMode::RlPlusImitation },
                    "seed" => seed = v.parse().unwrap(),
                    _ => panic!("unknown key {k}"),
                }
            }
            let t0 = std::time::Instant::now();
            let out = run_imitation(&cfg, seed, Path::new("/tmp/pilot/demos"), Path::new(&format!("/tmp/pilot/{name}"))).unwrap();
            println!("[{name}] done in {:?}: final {:.2}", t0.elapsed(), out.final_return);
            let evals: Vec<String> = out.evals.iter().map(|(s, r)| format!("{}:{r:.1}", s / 1000)).collect();
            println!("[{name}] evals {}", evals.join(" "));
        }
        "oracleail" => {
            // oracleail <steps> [key=val...]: the adversarial imitation loop
            // with a PERFECT latent (true [dx,dy,vx,vy]); no pixels involved.
            // Tests whether the discriminator-reward + TD3 machinery learns
            // when representation is not the problem.
            use eblaifo::ail_engine::*;
            use eblaifo::nn_core::{adam_step, AdamConfig, AdamState, Network, Tensor};
            use eblaifo::rng::{derive_seed, stream};
            use eblaifo::toy_world::{expert_features, reset, step};
            let steps: usize = args[2].parse().unwrap();
            let mut hp = base_cfg(0).hyper;
            let mut reward_mode = RewardMode::RlPlusImitation;
            let mut feat_kind = "rel".to_string();
            let mut demo_eps = 30u64;
            for kv in &args[3..] {
                let (k, v) = kv.split_once('=').unwrap();
                match k {
                    "batch" => hp.batch_size = v.parse().unwrap(),
                    "ue" => hp.update_every = v.parse().unwrap(),
                    "dlr" => hp.disc_lr = v.parse().unwrap(),
                    "alr" => hp.actor_lr = v.parse().unwrap(),
                    "clr" => hp.critic_lr = v.parse().unwrap(),
                    "sigma" => hp.explore_sigma = v.parse().unwrap(),
                    "gp" => hp.lambda_gp = v.parse().unwrap(),
                    "feat" => feat_kind = v.to_string(),
                    "demos" => demo_eps = v.parse().unwrap(),
                    "mode" => reward_mode = if v == "imit" { RewardMode::ImitationOnly } else { RewardMode::RlPlusImitation },
                    _ => panic!("unknown key {k}"),
                }
            }
            let env = EnvConfig::default();
            let seed = 1u64;
            let mut rng = stream(seed, "oracle", 0);
            // feat=abs swaps the relative latent [dx,dy,vx,vy] for absolute
            // coordinates [bx,by,gx,gy,vx,vy]: what a keypoint-style encoder
            // could produce without knowing which blob is the goal.
            let zd: usize = match feat_kind.as_str() { "abs" => 6, "absrel" => 8, _ => 4 };
            let absolute = feat_kind != "rel";
            let fk = feat_kind.clone();
            let feat = move |s: &eblaifo::toy_world::WorldState| -> Vec<f64> {
                match fk.as_str() {
                    "abs" => vec![s.position[0], s.position[1], s.goal[0], s.goal[1], s.velocity[0], s.velocity[1]],
                    "absrel" => vec![
                        s.position[0], s.position[1], s.goal[0], s.goal[1], s.velocity[0], s.velocity[1],
                        s.position[0] - s.goal[0], s.position[1] - s.goal[1],
                    ],
                    _ => expert_features(s).to_vec(),
                }
            };
            // expert demo latent pairs from the saved state-based expert
            let mut expert_actor = actor_net::<f64, _>(4, 2, &mut stream(0, "l", 0));
            eblaifo::nn_core::load_params(&mut expert_actor, Path::new("/tmp/pilot/expert_small.ckpt")).unwrap();
            let mut expert_pairs: Vec<(Vec<f64>, Vec<f64>)> = vec![];
            for ep in 0..demo_eps {
                let mut s = reset(derive_seed(0, "demo-episode", ep));
                let mut zprev = feat(&s);
                for _ in 0..100 {
                    let z = Tensor::from_vec(&[1, 4], expert_features(&s).to_vec());
                    let a = expert_actor.infer(&z).unwrap();
                    let (nx, _, _, _) = step(&env, &s, [a.data[0], a.data[1]]);
                    s = nx;
                    let znext = feat(&s);
                    expert_pairs.push((zprev, znext.clone()));
                    zprev = znext;
                }
            }
            // agent nets on the oracle latent
            let mut disc: Network<f64> = discriminator_net(zd, &mut rng);
            let mut critics = CriticPair::<f64>::new(zd + 2, hp.polyak, &mut rng);
            let mut actor = actor_net::<f64, _>(zd, 2, &mut rng);
            actor.zero_final_layer();
            let mut disc_opt = AdamState::new(&disc, AdamConfig::with_lr(hp.disc_lr));
            let mut q1_opt = AdamState::new(&critics.q1, AdamConfig::with_lr(hp.critic_lr));
            let mut q2_opt = AdamState::new(&critics.q2, AdamConfig::with_lr(hp.critic_lr));
            let mut actor_opt = AdamState::new(&actor, AdamConfig::with_lr(hp.actor_lr));
            // flat replay of (z, a, r_sparse, z')
            let mut replay: Vec<(Vec<f64>, [f64; 2], f64, Vec<f64>)> = vec![];
            let mut s = reset(derive_seed(seed, "episode", 0));
            let mut ep_idx = 0u64;
            let mut t_in_ep = 0;
            let mut rng2 = stream(seed, "act", 0);
            use rand_distr::{Distribution, Normal};
            for t in 1..=steps {
                let z = feat(&s);
                let action = if t <= hp.warmup_steps {
                    [rng2.gen_range(-1.0..1.0), rng2.gen_range(-1.0..1.0)]
                } else {
                    let zt = Tensor::from_vec(&[1, zd], z.clone());
                    let a = explore_action(&actor, &zt, hp.explore_sigma, hp.noise_clip, &mut rng2).unwrap();
                    [a[0], a[1]]
                };
                let (nx, _, sparse, _) = step(&env, &s, action);
                let znext = feat(&nx);
                replay.push((z, action, sparse, znext));
                s = nx;
                t_in_ep += 1;
                if t_in_ep == 100 {
                    ep_idx += 1;
                    s = reset(derive_seed(seed, "episode", ep_idx));
                    t_in_ep = 0;
                }
                if t > hp.warmup_steps && t % hp.update_every == 0 && replay.len() >= hp.batch_size {
                    // discriminator update
                    let eb: Vec<_> = (0..hp.batch_size).map(|_| expert_pairs[rng.gen_range(0..expert_pairs.len())].clone()).collect();
                    let ab: Vec<_> = (0..hp.batch_size).map(|_| { let r = &replay[rng.gen_range(0..replay.len())]; (r.0.clone(), r.3.clone()) }).collect();
                    let flat = |v: &Vec<(Vec<f64>,Vec<f64>)>| Tensor::from_vec(&[v.len(), 2*zd], v.iter().flat_map(|(a,b)| a.iter().chain(b.iter()).copied()).collect());
                    let coeffs: Vec<f64> = (0..hp.batch_size).map(|_| rng.gen_range(0.0..1.0)).collect();
                    let (_dl, mut dg) = disc_loss_and_grads(&disc, &flat(&eb), &flat(&ab), hp.disc_clamp, hp.lambda_gp, &coeffs).unwrap();
                    clip_grad_norm(&mut dg, hp.grad_clip);
                    adam_step(&mut disc, &dg, &mut disc_opt).unwrap();
                    // critic update (manual TD on oracle z)
                    let batch: Vec<_> = (0..hp.batch_size).map(|_| replay[rng.gen_range(0..replay.len())].clone()).collect();
                    let n = batch.len();
                    let zt = Tensor::from_vec(&[n, zd], batch.iter().flat_map(|b| b.0.iter().copied()).collect());
                    let zt1 = Tensor::from_vec(&[n, zd], batch.iter().flat_map(|b| b.3.iter().copied()).collect());
                    // reward from current D
                    let pairs = Tensor::from_vec(&[n, 2*zd], batch.iter().flat_map(|b| b.0.iter().chain(b.3.iter()).copied()).collect());
                    let d_out = disc.infer(&pairs).unwrap();
                    let normal = Normal::new(0.0, hp.explore_sigma).unwrap();
                    let a1 = actor.infer(&zt1).unwrap();
                    let w = zd + 2;
                    let mut za1 = vec![0.0; n * w];
                    for i in 0..n {
                        za1[i*w..i*w+zd].copy_from_slice(&batch[i].3);
                        for j in 0..2 {
                            let eps: f64 = normal.sample(&mut rng);
                            za1[i*w+zd+j] = (a1.data[i*2+j] + eps.clamp(-hp.noise_clip, hp.noise_clip)).clamp(-1.0, 1.0);
                        }
                    }
                    let za1 = Tensor::from_vec(&[n, w], za1);
                    let q1t = critics.target1.infer(&za1).unwrap();
                    let q2t = critics.target2.infer(&za1).unwrap();
                    let mut za = vec![0.0; n * w];
                    for i in 0..n {
                        za[i*w..i*w+zd].copy_from_slice(&batch[i].0);
                        za[i*w+zd] = batch[i].1[0];
                        za[i*w+zd+1] = batch[i].1[1];
                    }
                    let za = Tensor::from_vec(&[n, w], za);
                    for (qnet, qopt) in [(&mut critics.q1, &mut q1_opt), (&mut critics.q2, &mut q2_opt)] {
                        let cache = qnet.forward(&za).unwrap();
                        let qv = cache.output();
                        let mut up = vec![0.0; n];
                        for i in 0..n {
                            let r = combine_reward(batch[i].2, imitation_reward(d_out.data[i], hp.disc_clamp), reward_mode);
                            let y = r + hp.gamma * q1t.data[i].min(q2t.data[i]);
                            up[i] = 2.0 * (qv.data[i] - y) / n as f64;
                        }
                        let upt = Tensor::from_vec(&[n, 1], up);
                        let (mut g, _) = qnet.backward(&cache, &upt);
                        clip_grad_norm(&mut g, hp.grad_clip);
                        adam_step(qnet, &g, qopt).unwrap();
                    }
                    critics.polyak_update();
                    // actor update
                    let (_al, mut ag) = actor_loss_and_grads(&actor, &critics.q1, &zt).unwrap();
                    clip_grad_norm(&mut ag, hp.grad_clip);
                    adam_step(&mut actor, &ag, &mut actor_opt).unwrap();
                }
                if t % 5000 == 0 {
                    let mut tot = 0.0;
                    let mut dist_end = 0.0;
                    let mut act_mag = 0.0;
                    for ep in 0..10u64 {
                        let mut es = reset(derive_seed(seed, "ev", t as u64 * 100 + ep));
                        for _ in 0..100 {
                            let z = Tensor::from_vec(&[1, zd], feat(&es));
                            let a = actor.infer(&z).unwrap();
                            act_mag += (a.data[0].abs() + a.data[1].abs()) / 2.0;
                            let (nx, _, sp, _) = step(&env, &es, [a.data[0], a.data[1]]);
                            tot += sp;
                            es = nx;
                        }
                        let f = expert_features(&es);
                        dist_end += (f[0] * f[0] + f[1] * f[1]).sqrt();
                    }
                    // diagnostics: reward field along a line toward the goal
                    // (hover pairs at varying distance), plus batch stats
                    let mut line = String::new();
                    for k in 0..6 {
                        let dx = 0.12 * k as f64;
                        let z0: Vec<f64> = match feat_kind.as_str() {
                            "abs" => vec![0.5 + dx, 0.5 + dx, 0.5, 0.5, 0.0, 0.0],
                            "absrel" => vec![0.5 + dx, 0.5 + dx, 0.5, 0.5, 0.0, 0.0, dx, dx],
                            _ => vec![dx, dx, 0.0, 0.0],
                        };
                        let pair = Tensor::from_vec(&[1, 2*zd], z0.iter().chain(z0.iter()).copied().collect());
                        let d = disc.infer(&pair).unwrap().data[0];
                        line.push_str(&format!("{:.2} ", imitation_reward(d, hp.disc_clamp)));
                    }
                    let eb: Vec<_> = (0..64).map(|_| expert_pairs[rng.gen_range(0..expert_pairs.len())].clone()).collect();
                    let ab: Vec<_> = (0..64).map(|_| { let r = &replay[rng.gen_range(0..replay.len())]; (r.0.clone(), r.3.clone()) }).collect();
                    let flat = |v: &Vec<(Vec<f64>,Vec<f64>)>| Tensor::from_vec(&[v.len(), 2*zd], v.iter().flat_map(|(a,b)| a.iter().chain(b.iter()).copied()).collect());
                    let de = disc.infer(&flat(&eb)).unwrap().data.iter().sum::<f64>() / 64.0;
                    let da = disc.infer(&flat(&ab)).unwrap().data.iter().sum::<f64>() / 64.0;
                    println!(
                        "step {t}: sparse {:.2} dist_end {:.2} |a| {:.2} D(e) {:.2} D(a) {:.2} r(line to goal) {line}",
                        tot / 10.0, dist_end / 10.0, act_mag / 1000.0, de, da
                    );
                }
            }
        }
        "show" => {
            // show: print ASCII event frames for a few scripted steps.
            use eblaifo::event_core::{convert_pair, rgb_to_luminance};
            use eblaifo::rng::derive_seed;
            use eblaifo::toy_world::{expert_features, render, reset, step, DomainPreset};
            let cfg = base_cfg(0);
            let size = cfg.render_size as usize;
            let domain = cfg.domain(DomainPreset::Source);
            let mut state = reset(derive_seed(3, "show", 0));
            println!("goal {:?} pos {:?}", state.goal, state.position);
            let mut prev = rgb_to_luminance(&render(&state, &domain)).unwrap();
            for t in 0..6u64 {
                let f = expert_features(&state);
                let a = [(-f[0] * 4.0).clamp(-1.0, 1.0), (-f[1] * 4.0).clamp(-1.0, 1.0)];
                let (nx, _, _, _) = step(&cfg.env, &state, a);
                state = nx;
                let lum = rgb_to_luminance(&render(&state, &domain)).unwrap();
                let ev = convert_pair(&lum, &prev, &cfg.codec, 0, t).unwrap();
                prev = lum;
                println!("t={t} pos {:?} active {}", state.position, ev.active_count());
                for r in 0..size {
                    let row: String = (0..size)
                        .map(|c| match ev.data[r * size + c] {
                            1 => '+',
                            -1 => '-',
                            _ => '.',
                        })
                        .collect();
                    println!("  {row}");
                }
            }
        }
        "fixedz" => {
            // fixedz <steps> [key=val...]: the oracleail loop but with the
            // latent taken from a FROZEN randomly-initialized conv encoder
            // over event stacks. Separates "critic/actor can learn from fixed
            // random features" from "the encoder must be trained by TD".
            use eblaifo::ail_engine::*;
            use eblaifo::event_core::{convert_pair, rgb_to_luminance};
            use eblaifo::frame_io::read_frame_sequence;
            use eblaifo::harness::demo_episode_dirs;
            use eblaifo::nn_core::{adam_step, AdamConfig, AdamState, Network, Tensor};
            use eblaifo::rng::{derive_seed, stream};
            use eblaifo::toy_world::{render, reset, step, DomainPreset};
            use rand_distr::{Distribution, Normal};
            let steps: usize = args[2].parse().unwrap();
            let cfg = base_cfg(0);
            let mut hp = cfg.hyper;
            let mut reward_mode = RewardMode::RlPlusImitation;
            let mut enc_path: Option<String> = None;
            for kv in &args[3..] {
                let (k, v) = kv.split_once('=').unwrap();
                match k {
                    "batch" => hp.batch_size = v.parse().unwrap(),
                    "ue" => hp.update_every = v.parse().unwrap(),
                    "dlr" => hp.disc_lr = v.parse().unwrap(),
                    "alr" => hp.actor_lr = v.parse().unwrap(),
                    "clr" => hp.critic_lr = v.parse().unwrap(),
                    "sigma" => hp.explore_sigma = v.parse().unwrap(),
                    "gp" => hp.lambda_gp = v.parse().unwrap(),
                    "enc" => enc_path = Some(v.to_string()),
                    "mode" => reward_mode = if v == "imit" { RewardMode::ImitationOnly } else { RewardMode::RlPlusImitation },
                    _ => panic!("unknown key {k}"),
                }
            }
            let env = cfg.env.clone();
            let size = cfg.render_size as usize;
            let domain = cfg.domain(DomainPreset::Source);
            let d = hp.stack_depth;
            let zd = hp.z_dim;
            let seed = 1u64;
            let mut rng = stream(seed, "fixedz", 0);
            let mut enc = FeatureExtractor::<f32>::new(d, 2, size, size, zd, &mut stream(7, "enc", 0)).unwrap();
            if let Some(p) = &enc_path {
                eblaifo::nn_core::load_params(&mut enc.net, Path::new(p)).unwrap();
                println!("loaded frozen encoder from {p}");
            }
            let encode = |stack: &ObsStack| -> Vec<f64> {
                enc.net.infer(&stack.as_tensor::<f32>()).unwrap().data.iter().map(|v| *v as f64).collect()
            };
            // expert latent pairs from the recorded demos
            let mut expert_pairs: Vec<(Vec<f64>, Vec<f64>)> = vec![];
            for (ep, dir) in demo_episode_dirs(Path::new("/tmp/pilot/demos")).unwrap().iter().enumerate() {
                let frames = read_frame_sequence(dir).unwrap();
                let mut prev = rgb_to_luminance(&frames[0]).unwrap();
                let mut stack = ObsStack::new(d, 2, size, size);
                let mut zs: Vec<Vec<f64>> = vec![];
                for (i, f) in frames[1..].iter().enumerate() {
                    let lum = rgb_to_luminance(f).unwrap();
                    let ev = convert_pair(&lum, &prev, &cfg.codec, derive_seed(seed, "expert-stream", ep as u64), i as u64).unwrap();
                    prev = lum;
                    stack.push(StoredFrame::Events(ev));
                    if i + 1 >= d {
                        zs.push(encode(&stack));
                    }
                }
                for w in zs.windows(2) {
                    expert_pairs.push((w[0].clone(), w[1].clone()));
                }
            }
            println!("expert pairs: {}", expert_pairs.len());
            // agent nets on the frozen latent
            let mut disc: Network<f64> = discriminator_net(zd, &mut rng);
            let mut critics = CriticPair::<f64>::new(zd + 2, hp.polyak, &mut rng);
            let mut actor = actor_net::<f64, _>(zd, 2, &mut rng);
            actor.zero_final_layer();
            let mut disc_opt = AdamState::new(&disc, AdamConfig::with_lr(hp.disc_lr));
            let mut q1_opt = AdamState::new(&critics.q1, AdamConfig::with_lr(hp.critic_lr));
            let mut q2_opt = AdamState::new(&critics.q2, AdamConfig::with_lr(hp.critic_lr));
            let mut actor_opt = AdamState::new(&actor, AdamConfig::with_lr(hp.actor_lr));
            let mut replay: Vec<(Vec<f64>, [f64; 2], f64, Vec<f64>)> = vec![];
            let mut ep_idx = 0u64;
            let mut s = reset(derive_seed(seed, "episode", ep_idx));
            let mut prev_lum = rgb_to_luminance(&render(&s, &domain)).unwrap();
            let mut stack = ObsStack::new(d, 2, size, size);
            let mut frame_index = 0u64;
            let mut t_in_ep = 0;
            let mut rng2 = stream(seed, "act", 0);
            let flatz = |v: &[(Vec<f64>, Vec<f64>)]| {
                Tensor::from_vec(&[v.len(), 2 * zd], v.iter().flat_map(|(a, b)| a.iter().chain(b.iter()).copied()).collect())
            };
            for t in 1..=steps {
                let z = encode(&stack);
                let action = if t <= hp.warmup_steps {
                    [rng2.gen_range(-1.0..1.0), rng2.gen_range(-1.0..1.0)]
                } else {
                    let zt = Tensor::from_vec(&[1, zd], z.clone());
                    let a = explore_action(&actor, &zt, hp.explore_sigma, hp.noise_clip, &mut rng2).unwrap();
                    [a[0], a[1]]
                };
                let (nx, _, sparse, _) = step(&env, &s, action);
                s = nx;
                let lum = rgb_to_luminance(&render(&s, &domain)).unwrap();
                let ev = convert_pair(&lum, &prev_lum, &cfg.codec, derive_seed(seed, "agent-stream", 0), frame_index).unwrap();
                prev_lum = lum;
                frame_index += 1;
                stack.push(StoredFrame::Events(ev));
                let znext = encode(&stack);
                replay.push((z, action, sparse, znext));
                if replay.len() > hp.replay_capacity {
                    replay.remove(0);
                }
                t_in_ep += 1;
                if t_in_ep == 100 {
                    ep_idx += 1;
                    s = reset(derive_seed(seed, "episode", ep_idx));
                    prev_lum = rgb_to_luminance(&render(&s, &domain)).unwrap();
                    stack.reset();
                    t_in_ep = 0;
                }
                if t > hp.warmup_steps && t % hp.update_every == 0 && replay.len() >= hp.batch_size {
                    let eb: Vec<_> = (0..hp.batch_size).map(|_| expert_pairs[rng.gen_range(0..expert_pairs.len())].clone()).collect();
                    let ab: Vec<_> = (0..hp.batch_size).map(|_| { let r = &replay[rng.gen_range(0..replay.len())]; (r.0.clone(), r.3.clone()) }).collect();
                    let coeffs: Vec<f64> = (0..hp.batch_size).map(|_| rng.gen_range(0.0..1.0)).collect();
                    let (_dl, mut dg) = disc_loss_and_grads(&disc, &flatz(&eb), &flatz(&ab), hp.disc_clamp, hp.lambda_gp, &coeffs).unwrap();
                    clip_grad_norm(&mut dg, hp.grad_clip);
                    adam_step(&mut disc, &dg, &mut disc_opt).unwrap();
                    let batch: Vec<_> = (0..hp.batch_size).map(|_| replay[rng.gen_range(0..replay.len())].clone()).collect();
                    let n = batch.len();
                    let zt = Tensor::from_vec(&[n, zd], batch.iter().flat_map(|b| b.0.iter().copied()).collect());
                    let zt1 = Tensor::from_vec(&[n, zd], batch.iter().flat_map(|b| b.3.iter().copied()).collect());
                    let pairs = Tensor::from_vec(&[n, 2 * zd], batch.iter().flat_map(|b| b.0.iter().chain(b.3.iter()).copied()).collect());
                    let d_out = disc.infer(&pairs).unwrap();
                    let normal = Normal::new(0.0, hp.explore_sigma).unwrap();
                    let a1 = actor.infer(&zt1).unwrap();
                    let row = zd + 2;
                    let mut za1 = vec![0.0; n * row];
                    for i in 0..n {
                        za1[i * row..i * row + zd].copy_from_slice(&batch[i].3);
                        for j in 0..2 {
                            let eps: f64 = normal.sample(&mut rng);
                            za1[i * row + zd + j] = (a1.data[i * 2 + j] + eps.clamp(-hp.noise_clip, hp.noise_clip)).clamp(-1.0, 1.0);
                        }
                    }
                    let za1 = Tensor::from_vec(&[n, row], za1);
                    let q1t = critics.target1.infer(&za1).unwrap();
                    let q2t = critics.target2.infer(&za1).unwrap();
                    let mut za = vec![0.0; n * row];
                    for i in 0..n {
                        za[i * row..i * row + zd].copy_from_slice(&batch[i].0);
                        za[i * row + zd] = batch[i].1[0];
                        za[i * row + zd + 1] = batch[i].1[1];
                    }
                    let za = Tensor::from_vec(&[n, row], za);
                    for (qnet, qopt) in [(&mut critics.q1, &mut q1_opt), (&mut critics.q2, &mut q2_opt)] {
                        let cache = qnet.forward(&za).unwrap();
                        let qv = cache.output();
                        let mut up = vec![0.0; n];
                        for i in 0..n {
                            let r = combine_reward(batch[i].2, imitation_reward(d_out.data[i], hp.disc_clamp), reward_mode);
                            let y = r + hp.gamma * q1t.data[i].min(q2t.data[i]);
                            up[i] = 2.0 * (qv.data[i] - y) / n as f64;
                        }
                        let upt = Tensor::from_vec(&[n, 1], up);
                        let (mut g, _) = qnet.backward(&cache, &upt);
                        clip_grad_norm(&mut g, hp.grad_clip);
                        adam_step(qnet, &g, qopt).unwrap();
                    }
                    critics.polyak_update();
                    let (_al, mut ag) = actor_loss_and_grads(&actor, &critics.q1, &zt).unwrap();
                    clip_grad_norm(&mut ag, hp.grad_clip);
                    adam_step(&mut actor, &ag, &mut actor_opt).unwrap();
                }
                if t % 5000 == 0 {
                    let mut tot = 0.0;
                    let mut act_mag = 0.0;
                    for ep in 0..10u64 {
                        let mut es = reset(derive_seed(seed, "ev", t as u64 * 100 + ep));
                        let mut eprev = rgb_to_luminance(&render(&es, &domain)).unwrap();
                        let mut estack = ObsStack::new(d, 2, size, size);
                        for k in 0..100u64 {
                            let z = Tensor::from_vec(&[1, zd], encode(&estack));
                            let a = actor.infer(&z).unwrap();
                            act_mag += (a.data[0].abs() + a.data[1].abs()) / 2.0;
                            let (nx, _, sp, _) = step(&env, &es, [a.data[0], a.data[1]]);
                            tot += sp;
                            es = nx;
                            let lum = rgb_to_luminance(&render(&es, &domain)).unwrap();
                            let ev = convert_pair(&lum, &eprev, &cfg.codec, derive_seed(seed, "ev-stream", ep), k).unwrap();
                            eprev = lum;
                            estack.push(StoredFrame::Events(ev));
                        }
                    }
                    let eb: Vec<_> = (0..64).map(|_| expert_pairs[rng.gen_range(0..expert_pairs.len())].clone()).collect();
                    let ab: Vec<_> = (0..64).map(|_| { let r = &replay[rng.gen_range(0..replay.len())]; (r.0.clone(), r.3.clone()) }).collect();
                    let de = disc.infer(&flatz(&eb)).unwrap().data.iter().sum::<f64>() / 64.0;
                    let da = disc.infer(&flatz(&ab)).unwrap().data.iter().sum::<f64>() / 64.0;
                    println!("step {t}: sparse {:.2} |a| {:.2} D(e) {:.2} D(a) {:.2}", tot / 10.0, act_mag / 1000.0, de, da);
                }
            }
        }
        "repr" => {
            // repr <steps>: supervised check that encoder + head can regress
            // the true state features [dx, dy, vx, vy] from event stacks.
            use eblaifo::ail_engine::{Episode, ObsStack, ReplayBuffer, StoredFrame};
            use eblaifo::event_core::{convert_pair, rgb_to_luminance};
            use eblaifo::nn_core::{adam_step, AdamConfig, AdamState, LayerSpec, Network, Tensor};
            use eblaifo::rng::{derive_seed, stream};
            use eblaifo::toy_world::{expert_features, render, reset, step, DomainPreset};
            let steps: usize = args[2].parse().unwrap();
            let cfg = base_cfg(0);
            let hp = cfg.hyper;
            let size = cfg.render_size as usize;
            let domain = cfg.domain(DomainPreset::Source);
            let mut rng = stream(4, "repr", 0);
            // collect labelled episodes from a mixture of random and scripted policies
            let mut frames_all: Vec<Vec<StoredFrame>> = vec![];
            let mut labels_all: Vec<Vec<[f64; 4]>> = vec![];
            for ep in 0..80u64 {
                let mut state = reset(derive_seed(4, "repr-ep", ep));
                let mut prev = rgb_to_luminance(&render(&state, &domain)).unwrap();
                let (mut fs_, mut ls_) = (vec![], vec![]);
                let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                for t in 0..100u64 {
                    let a = if ep % 2 == 0 {
                        [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]
                    } else {
                        let f = expert_features(&state);
                        [(-f[0] * 4.0 - f[2] * 2.0 + theta.cos() * 0.3).clamp(-1.0, 1.0),
                         (-f[1] * 4.0 - f[3] * 2.0 + theta.sin() * 0.3).clamp(-1.0, 1.0)]
                    };
                    let (next, _, _, _) = step(&cfg.env, &state, a);
                    state = next;
                    let lum = rgb_to_luminance(&render(&state, &domain)).unwrap();
                    fs_.push(StoredFrame::Events(convert_pair(&lum, &prev, &cfg.codec, ep, t).unwrap()));
                    prev = lum;
                    ls_.push(expert_features(&state));
                }
                frames_all.push(fs_);
                labels_all.push(ls_);
            }
            // build an encoder + linear head; train on random stacks
            use eblaifo::ail_engine::FeatureExtractor;
            let mut enc = FeatureExtractor::<f32>::new(hp.stack_depth, 2, size, size, hp.z_dim, &mut rng).unwrap();
            let mut head: Network<f32> = Network::new("head", &[hp.z_dim], &[LayerSpec::Dense { out_dim: 4 }], &mut rng).unwrap();
            let mut enc_opt = AdamState::new(&enc.net, AdamConfig::with_lr(1e-3));
            let mut head_opt = AdamState::new(&head, AdamConfig::with_lr(1e-3));
            let d = hp.stack_depth;
            let batch = 64usize;
            for it in 0..steps {
                // sample batch of (stack ending at t, label at t)
                let mut xs = vec![];
                let mut ys = vec![];
                for _ in 0..batch {
                    let e = rng.gen_range(0..frames_all.len());
                    let t = rng.gen_range(d - 1..frames_all[e].len());
                    let mut stack = ObsStack::new(d, 2, size, size);
                    for k in t + 1 - d..=t {
                        stack.push(frames_all[e][k].clone());
                    }
                    xs.push(stack.as_tensor::<f32>());
                    ys.push(labels_all[e][t]);
                }
                let xcat = Tensor::from_vec(
                    &[batch, 2 * d, size, size],
                    xs.iter().flat_map(|t| t.data.iter().copied()).collect(),
                );
                let cache_e = enc.net.forward(&xcat).unwrap();
                let cache_h = head.forward(cache_e.output()).unwrap();
                let out = cache_h.output();
                let mut loss = 0.0f64;
                let mut up = vec![0.0f32; out.data.len()];
                for i in 0..batch {
                    for j in 0..4 {
                        let diff = out.data[i * 4 + j] as f64 - ys[i][j];
                        loss += diff * diff / (batch * 4) as f64;
                        up[i * 4 + j] = (2.0 * diff / (batch * 4) as f64) as f32;
                    }
                }
                let upt = Tensor::from_vec(&out.shape.clone(), up);
                let (hg, hx) = head.backward(&cache_h, &upt);
                let (eg, _) = enc.net.backward(&cache_e, &hx);
                adam_step(&mut head, &hg, &mut head_opt).unwrap();
                adam_step(&mut enc.net, &eg, &mut enc_opt).unwrap();
                if it % 200 == 0 {
                    println!("iter {it}: mse {loss:.4} (rms {:.3})", loss.sqrt());
                }
            }
            eblaifo::nn_core::save_params(&enc.net, Path::new("/tmp/pilot/repr_enc.ckpt")).unwrap();
            println!("saved encoder to /tmp/pilot/repr_enc.ckpt");
        }
        "probe-enc" => {
            // probe-enc <run-dir|random> <iters>: freeze an encoder (trained
            // checkpoint or random init) and train only a linear head to
            // regress [dx,dy,vx,vy]. Measures how much state information the
            // encoder's latent actually carries.
            use eblaifo::ail_engine::{FeatureExtractor, ObsStack, StoredFrame};
            use eblaifo::event_core::{convert_pair, rgb_to_luminance};
            use eblaifo::nn_core::{adam_step, AdamConfig, AdamState, LayerSpec, Network, Tensor};
            use eblaifo::rng::{derive_seed, stream};
            use eblaifo::toy_world::{expert_features, render, reset, step, DomainPreset};
            let src = &args[2];
            let iters: usize = args[3].parse().unwrap();
            let cfg = base_cfg(0);
            let hp = cfg.hyper;
            let size = cfg.render_size as usize;
            let domain = cfg.domain(DomainPreset::Source);
            let mut rng = stream(4, "repr", 0);
            let mut frames_all: Vec<Vec<StoredFrame>> = vec![];
            let mut labels_all: Vec<Vec<[f64; 4]>> = vec![];
            for ep in 0..80u64 {
                let mut state = reset(derive_seed(4, "repr-ep", ep));
                let mut prev = rgb_to_luminance(&render(&state, &domain)).unwrap();
                let (mut fs_, mut ls_) = (vec![], vec![]);
                let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                for t in 0..100u64 {
                    let a = if ep % 2 == 0 {
                        [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]
                    } else {
                        let f = expert_features(&state);
                        [(-f[0] * 4.0 - f[2] * 2.0 + theta.cos() * 0.3).clamp(-1.0, 1.0),
                         (-f[1] * 4.0 - f[3] * 2.0 + theta.sin() * 0.3).clamp(-1.0, 1.0)]
                    };
                    let (next, _, _, _) = step(&cfg.env, &state, a);
                    state = next;
                    let lum = rgb_to_luminance(&render(&state, &domain)).unwrap();
                    fs_.push(StoredFrame::Events(convert_pair(&lum, &prev, &cfg.codec, ep, t).unwrap()));
                    prev = lum;
                    ls_.push(expert_features(&state));
                }
                frames_all.push(fs_);
                labels_all.push(ls_);
            }
            let mut enc = FeatureExtractor::<f32>::new(hp.stack_depth, 2, size, size, hp.z_dim, &mut rng).unwrap();
            if src != "random" {
                eblaifo::nn_core::load_params(&mut enc.net, &Path::new(src).join("encoder.ckpt")).unwrap();
            }
            let mut head: Network<f32> = Network::new("head", &[hp.z_dim], &[LayerSpec::Dense { out_dim: 4 }], &mut rng).unwrap();
            let mut head_opt = AdamState::new(&head, AdamConfig::with_lr(1e-3));
            let d = hp.stack_depth;
            let batch = 64usize;
            for it in 0..iters {
                let mut xs = vec![];
                let mut ys = vec![];
                for _ in 0..batch {
                    let e = rng.gen_range(0..frames_all.len());
                    let t = rng.gen_range(d - 1..frames_all[e].len());
                    let mut stack = ObsStack::new(d, 2, size, size);
                    for k in t + 1 - d..=t {
                        stack.push(frames_all[e][k].clone());
                    }
                    xs.push(stack.as_tensor::<f32>());
                    ys.push(labels_all[e][t]);
                }
                let xcat = Tensor::from_vec(
                    &[batch, 2 * d, size, size],
                    xs.iter().flat_map(|t| t.data.iter().copied()).collect(),
                );
                let z = enc.net.infer(&xcat).unwrap();
                let cache_h = head.forward(&z).unwrap();
                let out = cache_h.output();
                let mut loss = 0.0f64;
                let mut up = vec![0.0f32; out.data.len()];
                for i in 0..batch {
                    for j in 0..4 {
                        let diff = out.data[i * 4 + j] as f64 - ys[i][j];
                        loss += diff * diff / (batch * 4) as f64;
                        up[i * 4 + j] = (2.0 * diff / (batch * 4) as f64) as f32;
                    }
                }
                let upt = Tensor::from_vec(&out.shape.clone(), up);
                let (hg, _) = head.backward(&cache_h, &upt);
                adam_step(&mut head, &hg, &mut head_opt).unwrap();
                if it % 200 == 0 || it + 1 == iters {
                    println!("[{src}] iter {it}: mse {loss:.4} (rms {:.3})", loss.sqrt());
                }
            }
        }
        "denserl" => {
            // denserl <steps>: pure RL from pixel events with the DENSE env
            // reward fed through the sparse channel. Isolates whether the
            // encoder/critic/actor core can learn from these observations at
            // all when the reward is maximally informative.
            use eblaifo::ail_engine::{explore_action, AilAgent, Episode, ObsStack, ReplayBuffer, StoredFrame};
            use eblaifo::event_core::{convert_pair, rgb_to_luminance};
            use eblaifo::rng::{derive_seed, stream};
            use eblaifo::toy_world::{render, reset, step, DomainPreset};
            let steps: u32 = args[2].parse().unwrap();
            let cfg = base_cfg(steps);
            let hp = cfg.hyper;
            let size = cfg.render_size as usize;
            let domain = cfg.domain(DomainPreset::Source);
            let seed = 1u64;
            let mut agent: AilAgent<f32> = AilAgent::new(2, size, size, 2, hp, &mut stream(seed, "init", 0)).unwrap();
            let mut buffer = ReplayBuffer::new(hp.replay_capacity, hp.stack_depth, false);
            let mut act_rng = stream(seed, "act", 0);
            let mut upd_rng = stream(seed, "update", 0);
            let mut ep_idx = 0u64;
            let mut state = reset(derive_seed(seed, "episode", ep_idx));
            let mut prev = rgb_to_luminance(&render(&state, &domain)).unwrap();
            let mut stack = ObsStack::new(hp.stack_depth, 2, size, size);
            let (mut fs_, mut as_, mut rs_) = (vec![], vec![], vec![]);
            let mut fi = 0u64;
            for t in 1..=steps as usize {
                let action = if t <= hp.warmup_steps {
                    [act_rng.gen_range(-1.0..1.0), act_rng.gen_range(-1.0..1.0)]
                } else {
                    let z = agent.encoder.encode(&stack.as_tensor::<f32>()).unwrap();
                    let a = explore_action(&agent.actor, &z, hp.explore_sigma, hp.noise_clip, &mut act_rng).unwrap();
                    [a[0], a[1]]
                };
                let (next, dense, _sparse, done) = step(&cfg.env, &state, action);
                state = next;
                let lum = rgb_to_luminance(&render(&state, &domain)).unwrap();
                let frame = StoredFrame::Events(convert_pair(&lum, &prev, &cfg.codec, seed, fi).unwrap());
                prev = lum;
                fi += 1;
                stack.push(frame.clone());
                fs_.push(frame);
                as_.push(action);
                rs_.push(dense);
                if done {
                    buffer.push_episode(Episode { frames: std::mem::take(&mut fs_), actions: std::mem::take(&mut as_), sparse: std::mem::take(&mut rs_) }).unwrap();
                    ep_idx += 1;
                    state = reset(derive_seed(seed, "episode", ep_idx));
                    prev = rgb_to_luminance(&render(&state, &domain)).unwrap();
                    stack.reset();
                }
                if t > hp.warmup_steps && t % hp.update_every == 0 && buffer.len_transitions() >= hp.batch_size {
                    let b = buffer.sample_pairs::<f32, _>(hp.batch_size, &mut upd_rng).unwrap();
                    let sp = b.sparse.clone().map(|s| vec![s]);
                    agent.update_critic(&[b.stack_t.clone(), b.stack_t1.clone()], b.actions.as_ref().unwrap(), sp.as_deref(), RewardMode::EnvironmentOnly, &mut upd_rng).unwrap();
                    agent.update_actor(&b.stack_t).unwrap();
                }
                if t % 2000 == 0 {
                    // deterministic eval on dense AND sparse return
                    let (mut dtot, mut stot) = (0.0, 0.0);
                    for ep in 0..5u64 {
                        let mut s = reset(derive_seed(seed, "ev", t as u64 * 100 + ep));
                        let mut pl = rgb_to_luminance(&render(&s, &domain)).unwrap();
                        let mut st = ObsStack::new(hp.stack_depth, 2, size, size);
                        for tt in 0..100u64 {
                            let z = agent.encoder.encode(&st.as_tensor::<f32>()).unwrap();
                            let a = agent.actor.infer(&z).unwrap();
                            let (nx, dd, sp, _) = step(&cfg.env, &s, [a.data[0] as f64, a.data[1] as f64]);
                            s = nx;
                            dtot += dd; stot += sp;
                            let l2 = rgb_to_luminance(&render(&s, &domain)).unwrap();
                            st.push(StoredFrame::Events(convert_pair(&l2, &pl, &cfg.codec, 99, tt).unwrap()));
                            pl = l2;
                        }
                    }
                    println!("step {t}: dense {:.2} sparse {:.2}", dtot / 5.0, stot / 5.0);
                }
            }
        }
        "rollout" => {
            // rollout <run-dir>: what does the learned policy do?
            use eblaifo::ail_engine::{FeatureExtractor, ObsStack};
            use eblaifo::event_core::{convert_pair, rgb_to_luminance};
            use eblaifo::ail_engine::StoredFrame;
            use eblaifo::toy_world::{expert_features, render, reset, step, DomainPreset};
            let run = Path::new(&args[2]);
            let cfg = base_cfg(0);
            let hp = cfg.hyper;
            let size = cfg.render_size as usize;
            let mut rng = eblaifo::rng::stream(0, "l", 0);
            let mut enc = FeatureExtractor::<f32>::new(hp.stack_depth, 2, size, size, hp.z_dim, &mut rng).unwrap();
            let mut actor = eblaifo::ail_engine::actor_net::<f32, _>(hp.z_dim, 2, &mut rng);
            eblaifo::nn_core::load_params(&mut enc.net, &run.join("encoder.ckpt")).unwrap();
            eblaifo::nn_core::load_params(&mut actor, &run.join("actor.ckpt")).unwrap();
            let domain = cfg.domain(DomainPreset::Source);
            for ep in 0..3u64 {
                let mut state = reset(10_000 + ep);
                let mut prev = rgb_to_luminance(&render(&state, &domain)).unwrap();
                let mut stack = ObsStack::new(hp.stack_depth, 2, size, size);
                println!("episode {ep}: goal {:?}", state.goal);
                for t in 0..100u64 {
                    let lum = rgb_to_luminance(&render(&state, &domain)).unwrap();
                    stack.push(StoredFrame::Events(convert_pair(&lum, &prev, &cfg.codec, 77, t).unwrap()));
                    prev = lum;
                    let z = enc.encode(&stack.as_tensor::<f32>()).unwrap();
                    let a = actor.infer(&z).unwrap();
                    let act = [a.data[0] as f64, a.data[1] as f64];
                    let (next, _, _, _) = step(&cfg.env, &state, act);
                    state = next;
                    if t % 10 == 0 {
                        let f = expert_features(&state);
                        let dist = (f[0] * f[0] + f[1] * f[1]).sqrt();
                        println!("  t={t:3} pos ({:+.2},{:+.2}) dist {dist:.3} act ({:+.2},{:+.2}) vel ({:+.2},{:+.2})",
                            state.position[0], state.position[1], act[0], act[1], f[2], f[3]);
                    }
                }
            }
        }
        _ => panic!(),
    }
}
