use cdrl_core::env::EnvId;
use cdrl_core::{train, Agent, AlgoConfig, AlgorithmId, Checkpoint, EnvConfig, RewardSpace};

fn small_ppo() -> AlgoConfig {
    let mut cfg = AlgoConfig::defaults(AlgorithmId::Ppo);
    cfg.hidden = vec![8];
    cfg.num_envs = 2;
    cfg.horizon = 50;
    cfg.epochs = 2;
    cfg.minibatches = 2;
    cfg.budget = 1_000;
    cfg.eval_interval = 400;
    cfg.eval_episodes = 2;
    cfg
}

fn small_dqn() -> AlgoConfig {
    let mut cfg = AlgoConfig::defaults(AlgorithmId::Dqn);
    cfg.hidden = vec![8];
    cfg.num_envs = 2;
    cfg.budget = 1_000;
    cfg.warmup_steps = 100;
    cfg.batch_size = 16;
    cfg.eval_interval = 500;
    cfg.eval_episodes = 2;
    cfg
}

fn space_for(env: &EnvConfig) -> RewardSpace {
    RewardSpace::with_epsilon(env.spec().feature_names, 0, 1.0, 0.5).unwrap()
}

fn checkpoint_text(agent: &Agent) -> String {
    let mut cp = Checkpoint::new();
    agent.write_to(&mut cp);
    cp.to_text()
}

#[test]
fn same_seed_same_run() {
    for (cfg, id) in [(small_ppo(), EnvId::PointRunner), (small_dqn(), EnvId::ChainMdp)] {
        let env = EnvConfig::new(id);
        let space = space_for(&env);
        let a = train(&cfg, &space, &env, true, 42).unwrap();
        let b = train(&cfg, &space, &env, true, 42).unwrap();
        assert_eq!(checkpoint_text(&a.agent), checkpoint_text(&b.agent));
        assert_eq!(a.log.to_csv(), b.log.to_csv());
        let c = train(&cfg, &space, &env, true, 43).unwrap();
        assert_ne!(checkpoint_text(&a.agent), checkpoint_text(&c.agent));
    }
}

#[test]
fn zero_budget_returns_the_initial_network() {
    let env = EnvConfig::new(EnvId::PointRunner);
    let space = space_for(&env);
    let mut cfg = small_ppo();
    cfg.budget = 0;
    let out = train(&cfg, &space, &env, true, 5).unwrap();
    assert_eq!(out.agent, Agent::init(&cfg, &env.spec(), 2, 5).unwrap());
    assert_eq!((out.agent_steps, out.updates, out.condition_draws), (0, 0, 0));
    assert!(out.log.rows.is_empty());
}

#[test]
fn ppo_counts_refreshes_in_updates() {
    let env = EnvConfig::new(EnvId::PointRunner);
    let space = space_for(&env);
    let mut cfg = small_ppo();
    // 1010 steps over 2 envs: ten horizons of 50, then one of 5.
    cfg.budget = 1_010;
    cfg.refresh_period = 3;
    let out = train(&cfg, &space, &env, true, 1).unwrap();
    assert_eq!((out.agent_steps, out.updates), (1_010, 11));
    assert_eq!(out.condition_draws, 1 + 11 / 3);

    cfg.refresh_period = 1_000_000;
    assert_eq!(train(&cfg, &space, &env, true, 1).unwrap().condition_draws, 1);
}

#[test]
fn off_policy_counts_refreshes_in_agent_steps() {
    let env = EnvConfig::new(EnvId::ChainMdp);
    let space = space_for(&env);
    let mut cfg = small_dqn();
    cfg.refresh_period = 100;
    let out = train(&cfg, &space, &env, true, 2).unwrap();
    assert_eq!(out.agent_steps, 1_000);
    assert_eq!(out.condition_draws, 1 + 10);
    // Training starts after warmup: 900 steps at one update per 8.
    assert_eq!(out.updates, 900 / 8);
    let rows: Vec<u64> = out.log.rows.iter().map(|r| r.agent_steps).collect();
    assert_eq!(rows, vec![500, 1_000]);
}

#[test]
fn baseline_sees_only_observations() {
    let env = EnvConfig::new(EnvId::PointRunner);
    let space = space_for(&env);
    let out = train(&small_ppo(), &space, &env, false, 3).unwrap();
    assert!(!out.agent.is_conditional());
    assert_eq!(out.agent.input_dim(), env.spec().obs_dim);
    assert_eq!(out.condition_draws, 1);
}

#[test]
fn feature_mismatch_is_a_config_error() {
    let env = EnvConfig::new(EnvId::PointRunner);
    let space = RewardSpace::with_epsilon(vec!["a".into(), "b".into()], 0, 1.0, 0.5).unwrap();
    let err = train(&small_ppo(), &space, &env, true, 0).unwrap_err();
    assert!(err.is_config());
    assert!(err.to_string().contains("reward_space.features"));
}

#[test]
fn ddpg_trains_end_to_end() {
    let env = EnvConfig::new(EnvId::PointRunner);
    let space = space_for(&env);
    let mut cfg = AlgoConfig::defaults(AlgorithmId::Ddpg);
    cfg.hidden = vec![8];
    cfg.num_envs = 2;
    cfg.budget = 600;
    cfg.warmup_steps = 200;
    cfg.train_every = 50;
    cfg.updates_per_train = 5;
    cfg.batch_size = 16;
    cfg.eval_episodes = 1;
    let out = train(&cfg, &space, &env, true, 8).unwrap();
    assert_eq!(out.updates, 400 / 50 * 5);
    assert_eq!(out.condition_draws, 1);
    let last = out.log.rows.last().unwrap();
    assert!(last.loss_policy.is_some() && last.loss_value.is_some());
}
