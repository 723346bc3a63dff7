use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::time::{Duration, Instant};

use monlab_core::dist::DelayModel;
use monlab_core::metrics::{quality_summary, Qualifier, Status};
use monlab_harness::bench::run_id;
use monlab_harness::store::{read_run, write_run};
use monlab_harness::{run_bench, spawn_agents, AgentConfig, BenchPlan, HarnessError, Manager, WorkloadConfig};

fn get(addr: std::net::SocketAddr, line: &str) -> String {
    let mut s = TcpStream::connect(addr).unwrap();
    s.write_all(line.as_bytes()).unwrap();
    let mut r = BufReader::new(s);
    let mut out = String::new();
    r.read_line(&mut out).unwrap();
    out
}

#[test]
fn constant_agent_repeats_its_value() {
    let agents = spawn_agents(&[AgentConfig::new("a", 2)], 1).unwrap();
    let addr = agents.endpoints()[0].1;
    let first = get(addr, "GET attr0,attr1\n");
    assert_eq!(first, "VAL attr0=100,attr1=101\n");
    assert_eq!(get(addr, "GET attr0,attr1\n"), first);
    assert!(get(addr, "GET attr7\n").starts_with("ERR "));
}

#[test]
fn fifty_agents_reachable_quickly() {
    let configs: Vec<_> = (0..50).map(|i| AgentConfig::new(format!("a{i}"), 1)).collect();
    let agents = spawn_agents(&configs, 3).unwrap();
    let deadline = Instant::now() + Duration::from_secs(2);
    let mut pending: Vec<_> = agents.endpoints().iter().map(|e| e.1).collect();
    while !pending.is_empty() && Instant::now() < deadline {
        pending.retain(|a| TcpStream::connect_timeout(a, Duration::from_millis(100)).is_err());
    }
    assert!(pending.is_empty(), "{} unreachable", pending.len());
}

#[test]
fn duplicate_port_rolls_back() {
    let taken = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port();
    let free = {
        let l = TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let mut first = AgentConfig::new("first", 1);
    first.listen_port = free;
    let mut second = AgentConfig::new("second", 1);
    second.listen_port = port;
    match spawn_agents(&[first, second], 0) {
        Err(HarnessError::Bind { agent, .. }) => assert_eq!(agent, "second"),
        Err(e) => panic!("unexpected error {e}"),
        Ok(_) => panic!("bind conflict not reported"),
    }
    // the first agent's port was released
    TcpListener::bind(("127.0.0.1", free)).expect("no orphan listener");
}

#[test]
fn healthy_round_is_all_ok() {
    let configs: Vec<_> = (0..8).map(|i| AgentConfig::new(format!("a{i}"), 3)).collect();
    let agents = spawn_agents(&configs, 0).unwrap();
    let mut m = Manager::new(agents.endpoints()).unwrap();
    m.connect_all(Duration::from_secs(1));
    for _ in 0..3 {
        let s = m.poll_round(3, Duration::from_secs(1));
        assert_eq!(s.len(), 8);
        assert!(s.iter().all(|x| x.status == Status::Ok && x.attribute_count == 3));
        assert!(s.iter().all(|x| x.delay.unwrap() < 0.5));
        assert_eq!(s[0].request_bytes, "GET attr0,attr1,attr2\n".len() as u64);
    }
    assert!(m.stored_bytes() > 0);
}

#[test]
fn slow_agent_times_out_alone() {
    let mut configs: Vec<_> = (0..4).map(|i| AgentConfig::new(format!("a{i}"), 1)).collect();
    configs[2].service_delay = Some(DelayModel::Constant(0.5));
    let agents = spawn_agents(&configs, 0).unwrap();
    let mut m = Manager::new(agents.endpoints()).unwrap();
    let t = Instant::now();
    let s = m.poll_round(1, Duration::from_millis(150));
    assert!(t.elapsed() < Duration::from_millis(400));
    let timed_out: Vec<_> = s.iter().filter(|x| x.status == Status::Timeout).collect();
    assert_eq!(timed_out.len(), 1);
    assert_eq!(timed_out[0].agent_id, "a2");
    // the late answer must not show up in the next round
    std::thread::sleep(Duration::from_millis(500));
    let s = m.poll_round(1, Duration::from_millis(150));
    let a2 = s.iter().find(|x| x.agent_id == "a2").unwrap();
    assert_eq!(a2.status, Status::Timeout);
}

#[test]
fn refused_connection_is_an_error_sample() {
    let addr = {
        let l = TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap()
    };
    let agents = spawn_agents(&[AgentConfig::new("up", 1)], 0).unwrap();
    let mut targets = agents.endpoints().to_vec();
    targets.push(("down".into(), addr));
    let mut m = Manager::new(&targets).unwrap();
    let s = m.poll_round(1, Duration::from_millis(300));
    assert_eq!(s.len(), 2);
    let down = s.iter().find(|x| x.agent_id == "down").unwrap();
    assert_eq!(down.status, Status::Error);
    assert!(s.iter().any(|x| x.agent_id == "up" && x.status == Status::Ok));
}

#[test]
fn zero_agents_give_empty_round() {
    let mut m = Manager::new(&[]).unwrap();
    assert!(m.poll_round(1, Duration::from_millis(10)).is_empty());
}

#[test]
fn single_agent_run_has_expected_sample_count() {
    let mut plan = BenchPlan::new(1, 10.0, 10.0);
    plan.round_timeout = 0.1;
    let rec = run_bench(&plan).unwrap();
    let n = rec.monitoring_series.samples.len();
    assert!((99..=101).contains(&n), "{n}");
    assert_eq!(rec.monitoring_series.qualifier, Qualifier::OneToOne);
    assert!(rec.aborted.is_none());
    assert!((rec.monitoring_series.duration - 10.0).abs() <= 0.5);
    assert!((rec.achieved_round_rate - 10.0).abs() <= 0.5);
    assert!(rec.monitoring_series.resources.len() >= 8);
    assert_eq!(rec.run_id, run_id(&plan));
}

#[test]
fn constant_delay_run_is_timely_and_round_trips_through_a_run_dir() {
    let mut plan = BenchPlan::new(20, 5.0, 4.0);
    plan.service_delay = Some(DelayModel::Constant(0.005));
    plan.round_timeout = 0.2;
    plan.workload = Some(WorkloadConfig {
        task_rate: 20.0,
        task_size: 0.5,
        task_deadline: 0.1,
        colocated: true,
    });
    let rec = run_bench(&plan).unwrap();
    // every issued poll yields exactly one sample
    assert_eq!(rec.monitoring_series.samples.len(), rec.rounds * 20);
    let q = quality_summary(&rec.monitoring_series, 1.0).unwrap();
    assert_eq!(q.timeliness, 1.0);
    assert!(rec
        .monitoring_series
        .samples
        .iter()
        .all(|s| s.delay.unwrap() >= 0.005));
    let work = rec.workload_series.as_ref().expect("workload series");
    assert!((78..=80).contains(&work.samples.len()), "{}", work.samples.len());

    let dir = tempfile::tempdir().unwrap();
    let files = write_run(dir.path(), &rec).unwrap();
    assert!(files.iter().all(|f| f.is_file()));
    let back = read_run(dir.path()).unwrap();
    assert_eq!(back, rec);
}

#[test]
fn backlog_aborts_with_partial_data() {
    // each round waits out a timeout far longer than the poll interval
    let mut plan = BenchPlan::new(2, 200.0, 2.0);
    plan.service_delay = Some(DelayModel::Constant(1.0));
    plan.round_timeout = 0.2;
    let rec = run_bench(&plan).unwrap();
    assert!(rec.is_aborted());
    assert!(rec.rounds < plan.round_count());
    assert_eq!(rec.monitoring_series.samples.len(), rec.rounds * 2);
    assert!(rec.max_backlog > 10);
}
