use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wavelet_core::batch::{
    access_batch, execute, rank_batch, restore_order, select_batch, sort_queries_by_symbol,
    BatchResults,
};
use wavelet_core::{BatchConfig, Error, QueryBatch, RankQuery, SelectQuery, WaveletTree};

fn tree_and_text(seed: u64, n: usize, sigma: u16) -> (WaveletTree, Vec<u16>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let text: Vec<u16> = (0..n).map(|_| rng.gen_range(0..sigma)).collect();
    (WaveletTree::construct(&text, 1).unwrap(), text)
}

fn random_batches(tree: &WaveletTree, num: usize, seed: u64) -> [QueryBatch; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = tree.len();
    let syms = tree.alphabet().symbols().to_vec();
    let access = (0..num).map(|_| rng.gen_range(0..n)).collect();
    let rank = (0..num)
        .map(|_| RankQuery {
            symbol: syms[rng.gen_range(0..syms.len())],
            pos: rng.gen_range(0..=n),
        })
        .collect();
    let select = (0..num)
        .map(|_| {
            let symbol = syms[rng.gen_range(0..syms.len())];
            SelectQuery {
                symbol,
                k: rng.gen_range(1..=tree.occurrences(symbol).unwrap()),
            }
        })
        .collect();
    [
        QueryBatch::Access(access),
        QueryBatch::Rank(rank),
        QueryBatch::Select(select),
    ]
}

fn sequential(tree: &WaveletTree, batch: &QueryBatch) -> BatchResults {
    match batch {
        QueryBatch::Access(q) => {
            BatchResults::Access(q.iter().map(|&i| tree.access(i).unwrap()).collect())
        }
        QueryBatch::Rank(q) => BatchResults::Rank(
            q.iter()
                .map(|q| tree.rank(q.symbol, q.pos).unwrap())
                .collect(),
        ),
        QueryBatch::Select(q) => BatchResults::Select(
            q.iter()
                .map(|q| tree.select(q.symbol, q.k).unwrap())
                .collect(),
        ),
    }
}

#[test]
fn batches_equal_sequential_loop() {
    let (tree, _) = tree_and_text(1, 50_000, 25);
    for batch in random_batches(&tree, 100_000, 2) {
        let want = sequential(&tree, &batch);
        for chunk in [1, 37, 4096, batch.len()] {
            for workers in [1, 2, 8] {
                let (got, stats) =
                    execute(&tree, &batch, BatchConfig::new(workers, chunk)).unwrap();
                assert_eq!(got, want, "chunk {chunk} workers {workers}");
                assert!(stats.peak_staged <= 2 * chunk);
                assert!(stats.allocated_records <= 2 * chunk);
            }
        }
    }
}

#[test]
fn sorted_queries_restore_input_order() {
    let (tree, _) = tree_and_text(3, 20_000, 243);
    let [_, rank, select] = random_batches(&tree, 30_000, 4);
    let cfg = BatchConfig::new(2, 1000);
    let QueryBatch::Rank(rank) = rank else {
        unreachable!()
    };
    let direct = rank_batch(&tree, &rank, cfg).unwrap();
    let (sorted, perm) = sort_queries_by_symbol(&rank, |q| q.symbol);
    assert!(sorted.windows(2).all(|w| w[0].symbol <= w[1].symbol));
    let via_sort = restore_order(&rank_batch(&tree, &sorted, cfg).unwrap(), &perm);
    assert_eq!(via_sort, direct);

    let QueryBatch::Select(select) = select else {
        unreachable!()
    };
    let direct = select_batch(&tree, &select, cfg).unwrap();
    let (sorted, perm) = sort_queries_by_symbol(&select, |q| q.symbol);
    let via_sort = restore_order(&select_batch(&tree, &sorted, cfg).unwrap(), &perm);
    assert_eq!(via_sort, direct);
}

#[test]
fn invalid_queries_abort_the_batch() {
    let (tree, _) = tree_and_text(5, 1000, 4);
    let mut q: Vec<RankQuery> = (0..5000)
        .map(|i| RankQuery {
            symbol: (i % 4) as u16,
            pos: (i % 1001) as u64,
        })
        .collect();
    q[4321].symbol = 9;
    q[4500].pos = 5000;
    match rank_batch(&tree, &q, BatchConfig::new(8, 100)) {
        Err(Error::Batch { index, source }) => {
            assert_eq!(index, 4321);
            assert!(matches!(*source, Error::SymbolNotInAlphabet(9)));
        }
        other => panic!("unexpected {other:?}"),
    }
    let bad_select = [SelectQuery { symbol: 0, k: 0 }];
    assert!(matches!(
        select_batch(&tree, &bad_select, BatchConfig::default()),
        Err(Error::Batch { index: 0, .. })
    ));
    assert!(access_batch(&tree, &[1000], BatchConfig::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chunk_size_never_changes_results(
        text in prop::collection::vec(0u16..9, 1..300),
        positions in prop::collection::vec(any::<u64>(), 0..300),
        chunk in 1usize..50,
        workers in 1usize..4,
    ) {
        let tree = WaveletTree::construct(&text, 1).unwrap();
        let n = text.len() as u64;
        let positions: Vec<u64> = positions.into_iter().map(|p| p % n).collect();
        let got = access_batch(&tree, &positions, BatchConfig::new(workers, chunk)).unwrap();
        let want: Vec<u16> = positions.iter().map(|&i| text[i as usize]).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn permutation_round_trip(symbols in prop::collection::vec(0u16..6, 0..200)) {
        let (sorted, perm) = sort_queries_by_symbol(&symbols, |&s| s);
        let restored = restore_order(&sorted, &perm);
        prop_assert_eq!(restored, symbols.clone());
        let mut p = perm.clone();
        p.sort_unstable();
        prop_assert!(p.into_iter().eq(0..symbols.len()));
        // equal symbols keep their input order
        for w in perm.windows(2) {
            if symbols[w[0]] == symbols[w[1]] {
                prop_assert!(w[0] < w[1]);
            }
        }
    }
}
