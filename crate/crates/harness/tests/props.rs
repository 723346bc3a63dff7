use monlab_harness::wire::{encode_get, parse_get, Response};
use monlab_harness::{BenchPlan, Factor, WorkloadConfig};
use proptest::prelude::*;

fn id() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_.]{0,11}"
}

proptest! {
    #[test]
    fn get_round_trips(ids in prop::collection::vec(id(), 1..20)) {
        let line = encode_get(&ids).unwrap();
        prop_assert_eq!(parse_get(&line).unwrap(), ids);
    }

    #[test]
    fn values_round_trip(pairs in prop::collection::vec((id(), -1e9f64..1e9), 1..20)) {
        let r = Response::Values(pairs);
        let line = r.encode().unwrap();
        prop_assert_eq!(Response::parse(&line).unwrap(), r);
    }

    #[test]
    fn err_encoding_is_one_line(msg in ".{0,40}") {
        let line = Response::Err(msg).encode().unwrap();
        prop_assert!(line.ends_with('\n'));
        prop_assert_eq!(line.matches('\n').count(), 1);
        prop_assert!(matches!(Response::parse(&line).unwrap(), Response::Err(_)));
    }

    #[test]
    fn plan_text_round_trips(
        n in 0usize..500,
        rate in 0.1f64..100.0,
        dur in 0.5f64..600.0,
        attrs in 1u32..50,
        seed in any::<u64>(),
        with_work in any::<bool>(),
        factor in prop::sample::select(vec![Factor::AgentCount, Factor::PollRate, Factor::AttributesPerPoll]),
    ) {
        let mut plan = BenchPlan::new(n, rate, dur);
        plan.attributes_per_poll = attrs;
        plan.attribute_count = plan.attribute_count.max(attrs);
        plan.seed = seed;
        plan.factor = factor;
        if with_work {
            plan.workload = Some(WorkloadConfig {
                task_rate: 20.0,
                task_size: 1.5,
                task_deadline: 0.05,
                colocated: seed % 2 == 0,
            });
        }
        let back = BenchPlan::parse(&plan.to_text()).unwrap();
        prop_assert_eq!(back, plan);
    }
}
