// compile-check of the README library example (adjusted file path)
use keynet::linkrates::PresetRegistry;
use keynet::netgraph::parse_network;
use keynet::ratecalc::protocol_rate;
use keynet::vulnset::{protocol_vuln, security_summary};

#[test]
fn readme_example_compiles_and_runs() -> Result<(), Box<dyn std::error::Error>> {
    let mut path = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    path.pop();
    path.pop();
    path.push("data/fig_network.json");
    let text = std::fs::read_to_string(path)?;
    let (graph, tree) = parse_network(&text)?;
    let rate = protocol_rate(&tree, &graph, &PresetRegistry::default())?;
    let v_min = protocol_vuln(&tree, &graph)?;
    let (min_attack, count) = security_summary(&v_min)?;
    assert!(rate.bps() > 0.0);
    assert_eq!((min_attack, count), (2, 9));
    Ok(())
}
