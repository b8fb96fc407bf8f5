use std::time::Instant;

use nearsym_core::contour::{csv, figure, svg, PANEL_TIMES};
use nearsym_core::handle::HandleFamily;

#[test]
fn figure_panels() {
    let start = Instant::now();
    for d in [0.1, 0.05] {
        let fam = HandleFamily::new(d).unwrap();
        let panels = figure(&fam, 512);
        let described: Vec<String> = panels.iter().map(|p| p.topology.describe()).collect();
        assert_eq!(described, ["2", "2", "1-with-node", "2", "2"]);
        let before = vec![vec!["NE", "NW"], vec!["SE", "SW"]];
        let after = vec![vec!["NE", "SE"], vec!["NW", "SW"]];
        for (p, t) in panels.iter().zip(PANEL_TIMES) {
            assert_eq!(p.t, t);
            match p.topology.count() {
                2 if t < 0.5 => assert_eq!(p.topology.pairing(), before),
                2 => assert_eq!(p.topology.pairing(), after),
                _ => assert_eq!(p.topology.node_count(), 1),
            }
            let s = svg(&fam, p);
            assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
            assert!(s.contains(r#"stroke="black" stroke-width="3""#));
            assert!(s.contains("stroke-dasharray"));
        }
    }
    assert!(start.elapsed().as_secs_f64() < 30.0);
}

#[test]
fn csv_grid() {
    let fam = HandleFamily::new(0.1).unwrap();
    let text = csv(&fam, -1.0, 8);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "x1,x3,f");
    assert_eq!(rows.len(), 1 + 81);
    // First sample is (-2, -2), where f = (4 - 1)/4.
    assert_eq!(rows[1], "-2,-2,0.75");
}
