use hwsn_core::analysis::{capture_and_measure, AttackSpec};
use hwsn_core::deployment::{deploy, discover_neighbors, DeploymentConfig};
use hwsn_core::protocol::{add_sensor, establish_all, predistribute, remove_head, replace_head, KeyMethod, SchemeParams};
use hwsn_core::rng::stream;
use hwsn_core::NodeKind;

#[test]
fn network_survives_head_turnover() {
    let cfg = DeploymentConfig { misdeploy_fraction: 0.05, ..DeploymentConfig::desk_scale(60, 31) };
    let mut dep = deploy(&cfg).unwrap();
    let mut g = discover_neighbors(&dep);
    let mut r = stream(31, "lifecycle", 0);
    let mut st = predistribute(&dep, SchemeParams::new(20, 40, 12), &mut r).unwrap();
    establish_all(&mut st, &dep, &g, &mut r).unwrap();

    let old = remove_head(&mut st, &mut dep, &mut g, 4).unwrap();
    assert!(st.established().keys().all(|l| !l.contains(old)));
    let new = replace_head(&mut st, &mut dep, &mut g, 4, &mut r).unwrap();
    assert_ne!(old, new);
    let poly_links = st
        .established()
        .iter()
        .filter(|(l, e)| l.contains(new) && e.method == KeyMethod::Poly)
        .count();
    assert!(poly_links > 0);

    let fresh = add_sensor(&mut st, &mut dep, &mut g, 4, &mut r).unwrap();
    assert_eq!(dep.node(fresh).unwrap().kind, NodeKind::RegularSensor);
    assert!(st.established().values().all(|l| l.agreed()));

    let rep = capture_and_measure(&st, &AttackSpec::sensors(100, 20, 1)).unwrap();
    assert_eq!(rep.fraction_compromised, 0.0);
}

#[test]
fn csv_outputs_have_documented_columns() {
    let dep = deploy(&DeploymentConfig::desk_scale(10, 32)).unwrap();
    let g = discover_neighbors(&dep);
    let mut r = stream(32, "csv", 0);
    let mut st = predistribute(&dep, SchemeParams::new(5, 8, 10), &mut r).unwrap();
    establish_all(&mut st, &dep, &g, &mut r).unwrap();

    let mut nodes = Vec::new();
    dep.write_csv(&mut nodes).unwrap();
    let nodes = String::from_utf8(nodes).unwrap();
    assert_eq!(nodes.lines().next(), Some("node_id,kind,group,x,y,misdeployed"));
    assert_eq!(nodes.lines().count(), 1 + 9 + 90);

    let mut links = Vec::new();
    st.write_links_csv(&mut links).unwrap();
    let links = String::from_utf8(links).unwrap();
    assert_eq!(links.lines().count(), 1 + st.established().len());

    let mut counters = Vec::new();
    st.write_counters_csv(&mut counters).unwrap();
    let counters = String::from_utf8(counters).unwrap();
    assert_eq!(counters.lines().next(), Some("node,msgs_sent,msgs_received,prf_evals,poly_evals"));
    assert!(counters.lines().last().unwrap().starts_with("bs,"));
}
