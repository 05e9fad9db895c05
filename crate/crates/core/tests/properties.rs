use ballot_geometry::clustering::{
    distance_matrix, pam_with_matrix, partition_difference, silhouette_with_matrix, Center, Clustering, DistanceSpec, SearchOptions,
};
use ballot_geometry::graphs::borda_geodesic;
use ballot_geometry::ingest::parse_blt;
use ballot_geometry::metrics::{disagreements, dist_b, dist_h, dist_hausdorff, dist_kp};
use ballot_geometry::slates::{simplex_map, SlateMethod, SlatePartition};
use ballot_geometry::{Ballot, BordaConvention, CandidateId, Exec, Profile};
use proptest::prelude::*;

fn ballot_in(m: usize) -> impl Strategy<Value = Ballot> {
    (Just((0..m).collect::<Vec<usize>>()).prop_shuffle(), 1..m.max(2)).prop_map(move |(order, len)| Ballot::from_indices(&order[..len.min(m)], m).unwrap())
}

fn triple() -> impl Strategy<Value = (Ballot, Ballot, Ballot)> {
    (2usize..=8).prop_flat_map(|m| (ballot_in(m), ballot_in(m), ballot_in(m)))
}

fn profile() -> impl Strategy<Value = Profile> {
    (3usize..=6).prop_flat_map(|m| prop::collection::vec((1u64..=9, ballot_in(m)), 3..20).prop_map(move |v| Profile::from_ballots(m, v).unwrap()))
}

fn labels(n: usize) -> impl Strategy<Value = (Vec<usize>, Vec<usize>, Vec<usize>, Vec<u64>)> {
    (prop::collection::vec(0usize..3, n), prop::collection::vec(0usize..3, n), prop::collection::vec(0usize..3, n), prop::collection::vec(1u64..5, n))
}

fn clustering(assignment: Vec<usize>, weights: Vec<u64>) -> Clustering {
    Clustering { k: 3, centers: vec![Center::Vector(vec![]); 3], assignment, weights, cost: 0.0 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn head_to_head_is_a_metric((x, y, z) in triple()) {
        let (xy, yz, xz) = (dist_h(&x, &y).unwrap(), dist_h(&y, &z).unwrap(), dist_h(&x, &z).unwrap());
        prop_assert_eq!(xy, dist_h(&y, &x).unwrap());
        prop_assert_eq!(xy.doubled() == 0, x == y);
        prop_assert!(xz <= xy + yz);
    }

    #[test]
    fn borda_is_a_metric_for_both_conventions((x, y, z) in triple()) {
        for conv in [BordaConvention::Pessimistic, BordaConvention::Averaged] {
            let (xy, yz, xz) = (dist_b(&x, &y, conv).unwrap(), dist_b(&y, &z, conv).unwrap(), dist_b(&x, &z, conv).unwrap());
            prop_assert_eq!(xy, dist_b(&y, &x, conv).unwrap());
            prop_assert!(xz <= xy + yz);
        }
        prop_assert_eq!(dist_b(&x, &y, BordaConvention::Pessimistic).unwrap().doubled() == 0, x == y);
    }

    #[test]
    fn disagreement_identity_and_bounds((x, y, _z) in triple()) {
        let d = disagreements(&x, &y).unwrap();
        let dh = dist_h(&x, &y).unwrap();
        let db = dist_b(&x, &y, BordaConvention::Pessimistic).unwrap();
        prop_assert_eq!(dh.doubled(), 2 * d.strong as i64 + d.weak as i64);
        prop_assert_eq!(d.weak, d.weak_forward + d.weak_backward);
        prop_assert!(db <= dh);
        if x != y {
            prop_assert!(dh.doubled() < 2 * db.doubled());
        }
        let haus = dist_hausdorff(&x, &y).unwrap() as i64;
        prop_assert!(dh.doubled() <= 2 * haus && haus <= db.doubled());
    }

    #[test]
    fn kp_triangle_inequality_from_one_half((x, y, z) in triple(), p in 0.5f64..=1.0) {
        let (xy, yz, xz) = (dist_kp(&x, &y, p).unwrap(), dist_kp(&y, &z, p).unwrap(), dist_kp(&x, &z, p).unwrap());
        prop_assert!(xz <= xy + yz + 1e-12);
    }

    #[test]
    fn geodesic_realizes_borda_distance((x, y, _z) in triple()) {
        let plan = borda_geodesic(&x, &y).unwrap();
        prop_assert_eq!(plan.total_weight(), dist_b(&x, &y, BordaConvention::Pessimistic).unwrap());
        prop_assert!(plan.is_borda_monotone());
        let path = plan.ballots();
        prop_assert_eq!(path.last().unwrap(), &y);
    }

    #[test]
    fn profile_text_round_trips(p in profile()) {
        let back = Profile::from_text(&p.to_text()).unwrap();
        prop_assert_eq!(back.to_text(), p.to_text());
    }

    #[test]
    fn blt_round_trips(p in profile()) {
        let mut text = format!("{} 1\n", p.num_candidates());
        for (b, n) in p.iter() {
            let prefs: Vec<String> = b.ranking().iter().map(|c| (c.0 + 1).to_string()).collect();
            text.push_str(&format!("{n} {} 0\n", prefs.join(" ")));
        }
        text.push_str("0\n");
        for name in p.names() {
            text.push_str(&format!("\"{name}\"\n"));
        }
        text.push_str("\"t\"\n");
        let doc = parse_blt(&text).unwrap();
        prop_assert_eq!(parse_blt(&doc.to_blt()).unwrap(), doc.clone());
        // cast length m - 1 and m are the same ballot, so compare via canonical types
        let q = doc.to_profile().unwrap();
        prop_assert_eq!(q.voter_count(), p.voter_count());
        for (b, n) in p.iter() {
            prop_assert_eq!(q.count_of(b), n);
        }
    }

    #[test]
    fn partition_difference_is_a_pseudometric((a, b, c, w) in labels(9)) {
        let (a, b, c) = (clustering(a, w.clone()), clustering(b, w.clone()), clustering(c, w));
        let ab = partition_difference(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(ab, partition_difference(&b, &a).unwrap());
        prop_assert_eq!(partition_difference(&a, &a).unwrap(), 0.0);
        let (bc, ac) = (partition_difference(&b, &c).unwrap(), partition_difference(&a, &c).unwrap());
        prop_assert!(ac <= ab + bc + 1e-12);
    }

    #[test]
    fn silhouette_is_bounded(p in profile(), seed in 0u64..4) {
        let d = distance_matrix(&p, DistanceSpec::HeadToHead, Exec::Serial).unwrap();
        let c = pam_with_matrix(&p, &d, 2, SearchOptions { seed, restarts: 2, exec: Exec::Serial }).unwrap();
        let s = silhouette_with_matrix(&c, &d).unwrap();
        prop_assert!((-1.0..=1.0).contains(&s));
        prop_assert_eq!(c.sizes().iter().sum::<u64>(), p.voter_count());
    }

    #[test]
    fn simplex_points_lie_on_the_simplex(b in (4usize..=7).prop_flat_map(ballot_in)) {
        let m = b.num_candidates();
        let s = SlatePartition::new(vec![(0..2).map(CandidateId).collect(), (2..m).map(CandidateId).collect()], m, SlateMethod::SimplexOptimal).unwrap();
        let pt = simplex_map(&b, &s);
        prop_assert!((pt.coords.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(pt.coords.iter().all(|&x| x >= 0.0));
    }
}
