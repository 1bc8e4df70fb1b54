use std::sync::Arc;

use super::rules::{RecipeVerb, PatchRegistry};
use super::*;
use crate::pipeline::{UpdateEntry, UpdateLog};

fn acts(tokens: &[&str]) -> Vec<Action> {
    tokens.iter().map(|t| t.parse().unwrap()).collect()
}

fn oc() -> Environment {
    Environment::load(EnvName::OvercookedLite).unwrap()
}

fn cw() -> Environment {
    Environment::load(EnvName::Craftworld).unwrap()
}

#[test]
fn shipped_versions_chain() {
    assert_eq!(oc().versions(), ["1.2.0", "1.2.1", "1.2.2", "1.2.3"]);
    assert_eq!(cw().versions(), ["1.0.0", "1.0.1", "1.0.2", "1.0.3"]);
}

#[test]
fn catalog_counts() {
    for (env, tasks, bugs, elems) in [(oc(), 7, 14, 10), (cw(), 9, 15, 30)] {
        assert_eq!(env.catalog.tasks.len(), tasks);
        assert_eq!(env.catalog.bugs.len(), bugs);
        assert_eq!(env.catalog.all_update_elements().len(), elems);
    }
    let c = cw();
    for d in [Difficulty::BasicCollection, Difficulty::IntermediateCrafting, Difficulty::AdvancedCombat] {
        assert_eq!(c.catalog.tasks.iter().filter(|t| t.difficulty == d).count(), 3);
    }
}

#[test]
fn reset_is_deterministic_and_checks_version() {
    let env = cw();
    assert_eq!(env.reset("v1.0.0", 7).unwrap(), env.reset("1.0.0", 7).unwrap());
    assert!(matches!(env.reset("v9.9.9", 0), Err(EnvError::UnknownVersion(_))));
    let steak = oc().rules("v1.2.1").unwrap();
    assert!(steak.recipe_for(RecipeVerb::Plate, "steak dish").is_some());
}

#[test]
fn listing_updates_patch_rules() {
    let c = cw();
    assert!(c.rules("1.0.0").unwrap().flag("sand_smelt_crash"));
    assert!(!c.rules("1.0.1").unwrap().flag("sand_smelt_crash"));
    assert_eq!(oc().rules("1.2.1").unwrap().param("board_capacity", 0.0), 2.0);
}

#[test]
fn empty_log_keeps_table() {
    let c = cw();
    let base = c.rules("1.0.0").unwrap();
    let next = apply_update(&base, &UpdateLog::empty("1.0.0", "1.0.0a"), &PatchRegistry::default()).unwrap();
    assert_eq!(next.version, "1.0.0a");
    let mut same = next.clone();
    same.version = base.version.clone();
    assert_eq!(&same, base.as_ref());
}

#[test]
fn unknown_entry_is_rejected() {
    let c = cw();
    let mut log = UpdateLog::empty("1.0.0", "1.0.1x");
    log.entries.push(UpdateEntry {
        category: crate::pipeline::EntryCategory::Feature,
        text: "Added dragons.".into(),
    });
    let reg = PatchRegistry::from_entries(c.catalog.patches.clone());
    assert!(matches!(
        apply_update(&c.rules("1.0.0").unwrap(), &log, &reg),
        Err(EnvError::UnknownEntry(_))
    ));
}

#[test]
fn wrong_submission_costs_five_plus_step() {
    let env = oc();
    let t = env.execute("1.2.1", 0, &acts(&["pick_up(tomato)", "submit"]), 100).unwrap();
    let last = t.steps.last().unwrap();
    assert_eq!(last.action.to_string(), "submit");
    assert!((last.reward - (-5.0 - 0.1)).abs() < 1e-9);
}

#[test]
fn wooden_pickaxe_iron_ore_by_version() {
    let env = cw();
    for (version, ok) in [("1.0.0", false), ("1.0.1", true)] {
        let mut st = env.reset(version, 0).unwrap();
        st.view.location = "cave".into();
        st.view.add("wooden pickaxe", 1);
        let out = env.step(&mut st, &Action::with("mine", "iron ore"));
        assert_eq!(out.valid, ok, "{version}");
        assert_eq!(st.view.count("iron ore") > 0, ok);
    }
}

#[test]
fn task_completion_pays_once() {
    let env = cw();
    let t = env.execute("1.0.0", 0, &acts(&["mine(tree)", "mine(tree)"]), 100).unwrap();
    let rewards: Vec<f64> = t.steps.iter().map(|s| s.reward).collect();
    // move_to(forest), mine(tree) → log: +10 key component, +200 task, then move-free second mine
    assert!((rewards[1] - (-0.1 + 10.0 + 200.0)).abs() < 1e-9, "{rewards:?}");
    assert!((rewards[2] + 0.1).abs() < 1e-9);
}

#[test]
fn walkthroughs_complete_their_tasks_on_base() {
    for env in [oc(), cw()] {
        let v = env.base_version().to_string();
        for task in &env.catalog.tasks {
            // Recipes that only ship later are checked on the newest version.
            let version = if env.rules(&v).unwrap().items().contains(task.goal.target())
                || env.rules(&v).unwrap().mobs.contains_key(task.goal.target())
            {
                v.clone()
            } else {
                env.versions().last().unwrap().clone()
            };
            let t = env.execute(&version, 1, &task.walkthrough, 500).unwrap();
            let done = task.goal.satisfied(t.final_state());
            let crash = task.id == "smelt_glass" && version == "1.0.0";
            assert_eq!(done, !crash, "{} on {version}", task.id);
        }
    }
}

#[test]
fn iron_sword_case_ends_holding_sword() {
    let env = cw();
    let task = env.catalog.task("craft_iron_sword").unwrap().clone();
    let t = env.execute("1.0.1", 3, &task.walkthrough, 500).unwrap();
    assert!(t.final_state().count("iron sword") > 0);
}

#[test]
fn execution_is_deterministic_and_flags_do_not_steer() {
    for env in [oc(), cw()] {
        let vocab = env.vocabulary(env.versions().last().unwrap()).unwrap();
        let cmds: Vec<Action> = (0..60).map(|i| vocab[(i * 7 + 3) % vocab.len()].clone()).collect();
        let v = env.versions()[1].clone();
        let a = env.execute(&v, 11, &cmds, 200).unwrap();
        let b = env.execute(&v, 11, &cmds, 200).unwrap();
        assert_eq!(a.to_jsonl(), b.to_jsonl());
        let c = env.execute_with(&v, 11, &cmds, 200, false).unwrap();
        let digests = |t: &RunTrace| t.steps.iter().map(|s| s.state_digest.clone()).collect::<Vec<_>>();
        assert_eq!(digests(&a), digests(&c));
    }
}

#[test]
fn step_limit_truncates() {
    let env = cw();
    let cmds = acts(&["mine(tree)"; 10]);
    let t = env.execute("1.0.0", 0, &cmds, 4).unwrap();
    assert_eq!(t.len(), 4);
    assert!(t.truncated);
}

#[test]
fn craftworld_travel_costs_atomic_steps() {
    let env = cw();
    let t = env.execute("1.0.0", 0, &acts(&["move_to(cave)"]), 10).unwrap();
    assert_eq!(t.len(), 2);
    assert_eq!(t.final_state().location, "cave");
    assert!(t.steps.iter().all(|s| (s.reward + 0.1).abs() < 1e-9));
}

#[test]
fn knife_loss_bug_flags_on_last_ingredient() {
    let env = oc();
    let t = env.execute("1.2.1", 0, &acts(&["pick_up(onion)", "chop"]), 50).unwrap();
    assert!(t.bug_flags.contains("oc-04"));
    let other = env.execute("1.2.0", 0, &acts(&["pick_up(onion)", "chop"]), 50).unwrap();
    assert!(!other.bug_flags.contains("oc-04"));
}

#[test]
fn empty_trace_flags_nothing() {
    let env = oc();
    let t = env.execute("1.2.1", 0, &[], 50).unwrap();
    assert!(t.is_empty());
    assert!(flag_bugs(&t, &env.catalog.bugs).is_empty());
}

#[test]
fn vocabulary_parses_back() {
    for env in [oc(), cw()] {
        for v in env.versions() {
            for a in env.vocabulary(v).unwrap() {
                assert_eq!(env.parse_action(&a.to_string()).unwrap(), a);
            }
        }
    }
    assert!(oc().parse_action("mine(stone)").is_err());
    assert!(oc().parse_action("chop(tomato)").is_err());
    assert!(cw().parse_action("mine").is_err());
}

/// Starting point and commands that behave differently once an entry's
/// patch is applied.
struct Witness {
    entry: &'static str,
    location: &'static str,
    inventory: &'static [&'static str],
    commands: &'static [&'static str],
}

const OC_WITNESSES: &[Witness] = &[
    Witness { entry: "Added new \"Steak Dish\" recipe.", location: "plating station", inventory: &["cooked steak", "chopped onion"], commands: &["plate"] },
    Witness { entry: "The chopping board now supports parallel ingredient cutting.", location: "prep station", inventory: &["tomato", "lettuce"], commands: &["chop"] },
    Witness { entry: "Fixed issue where the knife occasionally caused ingredient loss.", location: "prep station", inventory: &["tomato", "lettuce", "onion"], commands: &["chop"] },
    Witness { entry: "Fixed serving window not updating after failed dish submission.", location: "serving station", inventory: &["tomato"], commands: &["submit", "pick_up(tomato)", "chop", "cook", "plate", "submit"] },
    Witness { entry: "Added new \"Onion Soup\" recipe made from fried onion.", location: "cook station", inventory: &["chopped onion"], commands: &["cook"] },
    Witness { entry: "Fixed the stove burning ingredients that were already cooked.", location: "cook station", inventory: &["cooked fish"], commands: &["cook"] },
    Witness { entry: "Added new \"Burger\" recipe made with a toasted bun and cooked steak.", location: "pantry", inventory: &[], commands: &["pick_up(bun)"] },
    Witness { entry: "Fixed the pantry running out of steak after the first pick.", location: "pantry", inventory: &[], commands: &["pick_up(steak)", "pick_up(steak)"] },
];

const CW_WITNESSES: &[Witness] = &[
    Witness { entry: "Introduced the Diamond Pickaxe, capable of mining all blocks at high speed.", location: "base", inventory: &["diamond", "stick"], commands: &["craft(diamond pickaxe)"] },
    Witness { entry: "Introduced the Spider mob, which can be attacked using any sword.", location: "cave", inventory: &["wooden sword"], commands: &["attack(spider)"] },
    Witness { entry: "The Wooden Pickaxe now can mine Iron Ore.", location: "cave", inventory: &["wooden pickaxe"], commands: &["mine(iron ore)"] },
    Witness { entry: "Fixed a crash issue occurring when smelting sand in the furnace.", location: "base", inventory: &["sand", "coal"], commands: &["smelt(glass)"] },
    Witness { entry: "Added the Bow, crafted from a stick and string.", location: "base", inventory: &["stick", "string"], commands: &["craft(bow)"] },
    Witness { entry: "Torches can now be crafted from coal and a stick.", location: "base", inventory: &["stick", "coal"], commands: &["craft(torch)"] },
    Witness { entry: "Fixed issue with incorrect wooden plank crafting quantity.", location: "base", inventory: &["log"], commands: &["craft(wooden plank)"] },
    Witness { entry: "Fixed the Stone Pickaxe being unable to mine Coal Ore.", location: "quarry", inventory: &["stone pickaxe"], commands: &["mine(coal ore)"] },
    Witness { entry: "Introduced the Blaze in the Nether, which drops a Blaze Rod when defeated with an iron sword.", location: "nether", inventory: &["iron sword"], commands: &["attack(blaze)"] },
    Witness { entry: "Skeletons now drop a Bone, which can be crafted into Bone Meal.", location: "cave", inventory: &["stone sword"], commands: &["attack(skeleton)"] },
    Witness { entry: "Fixed pigs occasionally dropping no raw porkchop.", location: "plains", inventory: &[], commands: &["attack(pig)", "attack(pig)", "attack(pig)", "attack(pig)", "attack(pig)", "attack(pig)"] },
    Witness { entry: "Fixed iron smelting yielding only one iron ingot per iron ore.", location: "base", inventory: &["iron ore", "coal"], commands: &["smelt(iron ingot)"] },
    Witness { entry: "Fixed zombies not dropping rotten flesh.", location: "plains", inventory: &["wooden sword"], commands: &["attack(zombie)"] },
];

/// Runs `w` on the table just before its entry's patch and just after.
fn witness_differs(env: &Environment, w: &Witness) -> bool {
    let cat = &env.catalog;
    let registry = PatchRegistry::from_entries(cat.patches.clone());
    let (u, idx) = cat
        .updates
        .iter()
        .enumerate()
        .find_map(|(u, log)| log.entries.iter().position(|e| e.text == w.entry).map(|i| (u, i)))
        .unwrap_or_else(|| panic!("no entry {}", w.entry));
    let log = &cat.updates[u];
    let mut before = env.rules(&log.from_version).unwrap().as_ref().clone();
    let prefix = |n: usize| UpdateLog {
        entries: log.entries[..n].to_vec(),
        ..log.clone()
    };
    if idx > 0 {
        before = apply_update(&before, &prefix(idx), &registry).unwrap();
    }
    let after = apply_update(&before, &UpdateLog { entries: vec![log.entries[idx].clone()], ..log.clone() }, &registry).unwrap();
    let run = |table: &RuleTable, seed: u64| {
        let mut st = EnvState::new(Arc::new(table.clone()), seed);
        st.view.location = w.location.into();
        for i in w.inventory {
            st.view.add(i, 1);
        }
        let t = env.run_from_state(st, &acts(w.commands), 100, false);
        (t.steps.iter().map(|s| (s.valid, s.state_digest.clone())).collect::<Vec<_>>(), t.cumulative_reward)
    };
    (0..16).any(|seed| {
        let (a, ra) = run(&before, seed);
        let (b, rb) = run(&after, seed);
        a != b || (ra - rb).abs() > 1e-9
    })
}

#[test]
fn every_gameplay_patch_has_a_witness() {
    for (env, witnesses) in [(oc(), OC_WITNESSES), (cw(), CW_WITNESSES)] {
        let gameplay: Vec<&str> = env
            .catalog
            .patches
            .iter()
            .filter(|p| !p.ops.is_empty())
            .map(|p| p.entry.as_str())
            .collect();
        let covered: Vec<&str> = witnesses.iter().map(|w| w.entry).collect();
        assert_eq!(gameplay, covered, "{}", env.name);
        for w in witnesses {
            assert!(witness_differs(&env, w), "no behavioural change for `{}`", w.entry);
        }
    }
}

/// Rebuilds each trace's reward from its events alone.
fn rescore(env: &Environment, t: &RunTrace) -> f64 {
    let r = &env.rules(&t.version).unwrap().rewards;
    t.steps
        .iter()
        .map(|s| {
            let mut x = r.step;
            for e in &s.events {
                let txt = e.text.as_str();
                if txt.starts_with("player chops ") || (txt.starts_with("player cooks ") && txt.ends_with(" on the stove")) {
                    x += r.processed;
                } else if txt.starts_with("event: serving ") {
                    x += r.dish;
                } else if txt == "event: failed submission" {
                    x += r.wrong_submission;
                } else if txt.starts_with("reward: key component ") {
                    x += r.key_component;
                } else if txt.starts_with("reward: task completed ") {
                    x += r.task;
                }
            }
            x
        })
        .sum()
}

#[test]
fn rewards_are_recomputable_from_events() {
    for env in [oc(), cw()] {
        for v in env.versions() {
            for task in &env.catalog.tasks {
                let t = env.execute(v, 5, &task.walkthrough, 500).unwrap();
                assert!((rescore(&env, &t) - t.cumulative_reward).abs() < 1e-6, "{} {v}", task.id);
            }
        }
    }
}
