use powerurn_web::{lineage_fan, mrca_depths, renewal_weights};

#[test]
fn fan_edges_point_down_and_cover_the_window() {
    let edges = lineage_fan(0.39, 50, 64, 3).unwrap();
    assert_eq!(edges.len() % 3, 0);
    for e in edges.chunks(3) {
        assert!(e[1] < e[0]);
    }
    // a site whose first jump clears the cutoff draws no edge
    let covered = (1..=50).filter(|&s| edges.chunks(3).any(|e| e[0] == s as f64)).count();
    assert!(covered >= 40, "{covered}");
    assert_eq!(edges, lineage_fan(0.39, 50, 64, 3).unwrap());
}

#[test]
fn mrca_layout_matches_its_header() {
    let out = mrca_depths(0.39, 3, 500, 1, 20).unwrap();
    let k = out[0] as usize;
    assert!(k > 0 && k < 500);
    assert_eq!(out.len(), 1 + k + 40);
    assert!(out[1..=k].iter().all(|&d| d >= 0.0 && d <= 200.0));
}

#[test]
fn renewal_weights_are_probabilities() {
    let w = renewal_weights(0.25, 100).unwrap();
    assert_eq!(w.len(), 200);
    assert!(w.chunks(2).all(|p| p[0] > 0.0 && p[0] <= 1.0));
    assert!(lineage_fan(0.25, 0, 1, 1).is_err() && renewal_weights(0.7, 5).is_err());
}
