//! Randomized invariants over generated instances.

use nnf2sdd::corpus::{compile, random_function, random_instance, random_vtree, CompileOptions};
use nnf2sdd::io::{parse_circuit, serialize_circuit};
use nnf2sdd::oracle::{equivalent, minterm_complement, model_count, truth_table_at, DEFAULT_TABLE_CAP};
use nnf2sdd::simulation::{check_output, simulate, SimOptions};
use nnf2sdd::transforms::{enumerate_certificates, make_simple, restrict, smooth};
use nnf2sdd::validators::{check_decomposable, check_deterministic, check_respects_vtree, check_sdd, check_smooth};
use nnf2sdd::vtree::Orientation;
use nnf2sdd::{Assignment, Var};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const CAP: usize = DEFAULT_TABLE_CAP;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 48,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn simulation_yields_an_equivalent_sdd(n in 2u32..=8, density in 0.05f64..0.95, seed in any::<u64>(), minterm in any::<bool>()) {
        let mut inst = random_instance(n, density, seed).unwrap();
        if minterm {
            inst.dbar = minterm_complement(&inst.d, &inst.t).unwrap();
        }
        let sim = simulate(&inst.d, &inst.dbar, &inst.t, &SimOptions::default()).unwrap();
        let r = check_sdd(&sim.s, &sim.t_prime.tree, CAP);
        prop_assert!(r.holds, "{}", r.summary());
        let aux = sim.t_prime.tree.aux().clone();
        prop_assert!(equivalent(&inst.d, &sim.s, &aux).unwrap().equivalent);
        prop_assert!(check_output(&sim, CAP).holds);
        let st = &sim.trace.stats;
        prop_assert!(st.size_s <= st.key_space);
    }

    #[test]
    fn compiled_circuits_are_structured_ddnnfs(n in 1u32..=9, density in 0.0f64..1.0, seed in any::<u64>(), canonical in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vars: Vec<Var> = (1..=n).map(Var).collect();
        let t = random_vtree(&vars, &mut rng).unwrap();
        let f = random_function(&vars, density, &mut rng).unwrap();
        let opts = if canonical { CompileOptions::canonical() } else { CompileOptions::random(seed) };
        let c = compile(&f, &t, &opts).unwrap();
        prop_assert_eq!(truth_table_at(&c, c.root(), &vars, CAP).unwrap().to_bit_string(), f.to_bit_string());
        prop_assert!(check_decomposable(&c).holds);
        prop_assert!(check_deterministic(&c, CAP).holds);
        prop_assert!(check_respects_vtree(&c, &t, Orientation::DdnnfUnoriented).holds);
        if canonical {
            prop_assert!(check_sdd(&c, &t, CAP).holds);
        }
    }

    #[test]
    fn restriction_conditions_the_function(n in 2u32..=8, seed in any::<u64>(), mask in any::<u32>(), bits in any::<u32>()) {
        let inst = random_instance(n, 0.5, seed).unwrap();
        let mut p = Assignment::new();
        for k in 0..n {
            if mask >> k & 1 == 1 {
                p.set(Var(k + 1), bits >> k & 1 == 1);
            }
        }
        let r = restrict(&inst.d, &inst.t, &p).unwrap();
        let order: Vec<Var> = (1..=n).map(Var).collect();
        for i in 0..1u64 << n {
            let a = Assignment::from_index(&order, i);
            if p.iter().all(|(v, b)| a.get(v) == Some(b)) {
                let got = r.circuit.eval_with(r.circuit.root(), |v| a.get(v).unwrap_or(false));
                prop_assert_eq!(got, inst.d.evaluate_root(&a).unwrap());
            }
        }
    }

    #[test]
    fn transforms_preserve_function_and_are_idempotent(n in 1u32..=8, density in 0.0f64..1.0, seed in any::<u64>()) {
        let inst = random_instance(n, density, seed).unwrap();
        let order: Vec<Var> = (1..=n).map(Var).collect();
        let want = truth_table_at(&inst.d, inst.d.root(), &order, CAP).unwrap().to_bit_string();
        let s = make_simple(&inst.d).unwrap();
        let m = smooth(&inst.d, &inst.t).unwrap();
        prop_assert_eq!(truth_table_at(&s, s.root(), &order, CAP).unwrap().to_bit_string(), want.clone());
        prop_assert_eq!(truth_table_at(&m, m.root(), &order, CAP).unwrap().to_bit_string(), want);
        prop_assert!(check_smooth(&m).holds);
        prop_assert_eq!(make_simple(&s).unwrap(), s);
        prop_assert_eq!(smooth(&m, &inst.t).unwrap(), m);
    }

    #[test]
    fn certificates_count_models(n in 1u32..=8, density in 0.0f64..1.0, seed in any::<u64>()) {
        let inst = random_instance(n, density, seed).unwrap();
        let universe = inst.t.variables().clone();
        let weighted: u64 = enumerate_certificates(&inst.d, 1 << 20)
            .iter()
            .filter(|c| c.is_one())
            .map(|c| 1u64 << (n as usize - c.decisions.len()))
            .sum();
        prop_assert_eq!(weighted, model_count(&inst.d, &universe).unwrap());
    }

    #[test]
    fn circuit_text_round_trips(n in 1u32..=8, seed in any::<u64>()) {
        let inst = random_instance(n, 0.5, seed).unwrap();
        let text = serialize_circuit(&inst.dbar);
        let back = parse_circuit(&text).unwrap();
        prop_assert_eq!(serialize_circuit(&back), text);
        prop_assert_eq!(back, inst.dbar);
    }
}
