use hjnet::network::{build_grid, NodeKind};
use hjnet::{load_network, Error, Scenario};

const TWO_ARCS: &str = r#"{
    "nodes": [
        {"id": "L", "kind": "boundary", "position": [-1.0, 0.0], "bc": {"kind": "dirichlet", "value": 0.0}},
        {"id": "O", "kind": "junction", "position": [0.0, 0.0], "A": 0.0},
        {"id": "R", "kind": "boundary", "position": [1.0, 0.0], "bc": {"kind": "dirichlet", "value": 0.0}}
    ],
    "arcs": [
        {"id": "J1", "from": "O", "to": "L", "length": 1.0, "lagrangian": {"type": "quadratic", "c": 0.5}},
        {"id": "J2", "from": "O", "to": "R", "length": 1.0, "lagrangian": {"type": "quadratic", "c": 1.0}}
    ]
}"#;

#[test]
fn two_arc_junction() {
    let net = load_network(TWO_ARCS).unwrap();
    assert_eq!(net.nodes().len(), 3);
    assert_eq!(net.arcs().len(), 2);
    assert_eq!(net.node(net.node_by_id("O").unwrap()).kind, NodeKind::Junction);
    assert_eq!(build_grid(&net, 0.01).unwrap().len(), 201);
    assert!(matches!(build_grid(&net, 0.3), Err(Error::NonCommensurate { .. })));
}

#[test]
fn single_arc_between_boundaries() {
    let net = load_network(
        r#"{"nodes": [{"id": "a", "kind": "boundary"}, {"id": "b", "kind": "boundary"}],
            "arcs": [{"id": "e", "from": "a", "to": "b", "length": 1.0, "lagrangian": {"type": "flux", "lambda": 1.0}}]}"#,
    )
    .unwrap();
    assert_eq!(build_grid(&net, 0.25).unwrap().len(), 5);
}

#[test]
fn rejects_invalid_documents() {
    let unknown = TWO_ARCS.replace(r#""to": "R""#, r#""to": "Z""#);
    assert!(matches!(load_network(&unknown), Err(Error::UnknownNode { .. })));
    let negative = TWO_ARCS.replace(r#""length": 1.0, "lagrangian": {"type": "quadratic", "c": 1.0}"#, r#""length": -1.0, "lagrangian": {"type": "quadratic", "c": 1.0}"#);
    assert!(matches!(load_network(&negative), Err(Error::NonPositiveLength { .. })));
    let dangling_boundary = TWO_ARCS.replace(r#""to": "R""#, r#""to": "L""#);
    assert!(matches!(load_network(&dangling_boundary), Err(Error::BoundaryDegree { .. })));
    assert!(matches!(load_network("{\"nodes\": 3}"), Err(Error::Json(..))));
}

#[test]
fn scenario_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for name in Scenario::builtin_names() {
        let original = Scenario::builtin(name).unwrap();
        let path = dir.path().join(format!("{name}.json"));
        std::fs::write(&path, original.to_json().unwrap()).unwrap();
        let loaded = Scenario::load(&path).unwrap();
        assert_eq!(loaded.network.nodes(), original.network.nodes());
        assert_eq!(loaded.network.arcs(), original.network.arcs());
        assert_eq!(loaded.params, original.params);
        assert_eq!(loaded.initial, original.initial);
    }
    assert!(matches!(Scenario::load(dir.path().join("missing.json")), Err(Error::Scenario(..))));
}
