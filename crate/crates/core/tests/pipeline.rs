use gann_core::builder::{build_dc, build_ii, nndescent, refine_with_nd, BuildParams, NnDescentParams};
use gann_core::data::{gen_powerlaw, ground_truth, PowerLawSpec, VectorSet, Vectors};
use gann_core::diversify::Diversifier;
use gann_core::graph::{load_index, save_index, BuildMeta, Index, IndexFile, PartitionMode};
use gann_core::search::{recall, QueryEval, Scratch, SearchParams, Searcher};
use gann_core::seeds::{sn_descend, SeedIndex, SeedStrategy};
use gann_core::DistCounter;

fn uniform(n: usize, d: usize, seed: u64) -> VectorSet {
    gen_powerlaw(&PowerLawSpec::new(n, d, 0.0, seed)).unwrap()
}

fn params() -> BuildParams {
    BuildParams {
        cap_r: 16,
        beam_l: 64,
        deterministic: true,
        seed: 11,
        ..BuildParams::default()
    }
}

fn mean_recall(searcher: &Searcher<'_, VectorSet>, queries: &VectorSet, p: &SearchParams) -> f64 {
    let (truth, _) = ground_truth(searcher.set(), queries, p.k).unwrap();
    let mut scratch = Scratch::new(searcher.set().len());
    let total: f64 = queries
        .rows()
        .enumerate()
        .map(|(i, q)| {
            let r = searcher.search(q, i as u64, p, &mut scratch).unwrap();
            recall(&r.ids(), truth[i].iter().map(|c| c.id), p.k)
        })
        .sum();
    total / queries.len() as f64
}

#[test]
fn full_width_search_is_exact_on_connected_index() {
    let set = uniform(300, 4, 1);
    let queries = uniform(20, 4, 2);
    let built = build_ii(&set, &BuildParams { connect: true, ss: SeedStrategy::Md, ..params() }).unwrap();
    let searcher = Searcher::new(&set, &built.index, &built.seeds).unwrap();
    let p = SearchParams::new(300, 300);
    assert_eq!(mean_recall(&searcher, &queries, &p), 1.0);
}

#[test]
fn every_seed_strategy_searches_well() {
    let set = uniform(3000, 8, 3);
    let queries = uniform(50, 8, 4);
    for ss in SeedStrategy::ALL {
        let built = build_ii(&set, &BuildParams { ss, ..params() }).unwrap();
        let searcher = Searcher::new(&set, &built.index, &built.seeds).unwrap();
        let p = SearchParams { seed_count: 8, ..SearchParams::new(10, 64) };
        let r = mean_recall(&searcher, &queries, &p);
        assert!(r > 0.9, "{ss}: recall {r}");
    }
}

#[test]
fn centroid_evaluations_are_reported_separately() {
    let set = uniform(5000, 4, 5);
    let built = build_ii(&set, &BuildParams { ss: SeedStrategy::Km, ..params() }).unwrap();
    let searcher = Searcher::new(&set, &built.index, &built.seeds).unwrap();
    let mut scratch = Scratch::new(5000);
    let r = searcher.search(&[0.5; 4], 0, &SearchParams::new(10, 20), &mut scratch).unwrap();
    assert!(r.aux_calcs > 0);
    assert!(r.distance_calcs > r.aux_calcs);
}

#[test]
fn sn_descent_never_moves_away() {
    let set = uniform(4000, 6, 6);
    let built = build_ii(&set, &BuildParams { ss: SeedStrategy::Sn, ..params() }).unwrap();
    let Index::Layered(layers) = &built.index else { panic!("expected layers") };
    let queries = uniform(200, 6, 7);
    let mut scratch = Scratch::new(4000);
    for q in queries.rows() {
        let mut eval = QueryEval::new(&set, q, &mut scratch);
        let seed = sn_descend(layers, &mut eval);
        let entry = eval.node(layers.entry());
        assert!(seed.dist <= entry);
    }
}

#[test]
fn separate_partitions_gain_from_more_probes() {
    let set = uniform(4000, 8, 8);
    let queries = uniform(60, 8, 9);
    let p = BuildParams { leaf_size: 1000, ..params() };
    let built = build_dc(&set, &p, PartitionMode::Separate).unwrap();
    let searcher = Searcher::new(&set, &built.index, &built.seeds).unwrap();
    let sp = SearchParams::new(10, 40);
    let one = mean_recall(&searcher, &queries, &SearchParams { nprobe: 1, ..sp });
    let all = mean_recall(&searcher, &queries, &SearchParams { nprobe: 4, ..sp });
    let parallel = mean_recall(&searcher, &queries, &SearchParams { nprobe: 4, parallel_probes: true, ..sp });
    assert!(all >= one, "{all} < {one}");
    assert!(all > 0.9);
    assert_eq!(all, parallel);
}

#[test]
fn merged_partitions_search_like_flat() {
    let set = uniform(2000, 6, 10);
    let queries = uniform(40, 6, 11);
    let built = build_dc(&set, &BuildParams { leaf_size: 700, ..params() }, PartitionMode::Merged).unwrap();
    assert!(matches!(built.index, Index::Flat(_)));
    let searcher = Searcher::new(&set, &built.index, &built.seeds).unwrap();
    assert!(mean_recall(&searcher, &queries, &SearchParams::new(10, 64)) > 0.9);
}

#[test]
fn files_keep_seed_structures() {
    let set = uniform(1500, 5, 12);
    let dir = tempfile::tempdir().unwrap();
    for ss in SeedStrategy::ALL {
        let built = build_ii(&set, &BuildParams { ss, ..params() }).unwrap();
        let mut file = IndexFile::new(5, built.index.clone());
        file.seeds = Some(built.seeds.clone());
        file.meta = Some(BuildMeta { method: "ii".into(), nd: "rnd".into(), ss: ss.label().into() });
        let path = dir.path().join(format!("{ss}.gann"));
        save_index(&path, &file).unwrap();
        let back = load_index(&path).unwrap();
        assert_eq!(back, file);
        if let Some(SeedIndex::Kd(f)) = &back.seeds {
            assert_eq!(f.trees.len(), 4);
        }
    }
}

#[test]
fn refined_nndescent_graph_is_searchable() {
    let set = uniform(1500, 6, 13);
    let queries = uniform(30, 6, 14);
    let (g, report) = nndescent(&set, &NnDescentParams::new(20, 1)).unwrap();
    assert!(report.distance_calcs > 0);
    let (refined, _, ratio) = refine_with_nd(&g, &set, &Diversifier::Rnd, 20).unwrap();
    assert!(ratio > 0.0);
    let index = Index::Flat(refined);
    let seeds = SeedIndex::build(SeedStrategy::Md, &set, &Default::default(), &mut DistCounter::new()).unwrap();
    let searcher = Searcher::new(&set, &index, &seeds).unwrap();
    assert!(mean_recall(&searcher, &queries, &SearchParams::new(10, 64)) > 0.8);
}
