use std::time::Instant;
use klpeg::agents::{run_ga, run_random, sub_seed, GaConfig};
use klpeg::env::{EnvName, Environment};

fn main() {
    let env = Environment::load(EnvName::OvercookedLite).unwrap();
    let v = env.base_version().to_string();
    let mut wins = 0;
    let t = Instant::now();
    for seed in 0..20u64 {
        let ga = run_ga(&env, &v, &GaConfig { seed, ..Default::default() }).unwrap();
        let mono = ga.history.windows(2).all(|w| w[1] >= w[0]);
        let rnd = (0..7u64).map(|i| run_random(&env, &v, sub_seed(seed, i), 100).unwrap().cumulative_reward).fold(f64::MIN, f64::max);
        if ga.best_fitness > rnd { wins += 1; }
        println!("seed {seed}: ga {:.1} (init {:.1}) mono={mono} random {:.1}", ga.best_fitness, ga.history[0], rnd);
    }
    println!("wins {wins}/20 in {:.1}s", t.elapsed().as_secs_f64());
}
