#![allow(dead_code)]

pub mod golden;
pub mod impact;
pub mod relations;
pub mod specs;

use std::path::{Path, PathBuf};

use paramfuzz::case::{CaseLimits, TestCase};
use paramfuzz::descgen::{self, Generated};
use paramfuzz::dmir::{self, DmirProgram};
use paramfuzz::fuzzer::{Mode, Mutator};
use paramfuzz::{extractor, vkernel, SplitMix64};

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub struct CorpusFile {
    pub name: String,
    pub source: String,
    pub program: DmirProgram,
}

/// Every `.dmir` file in the corpus, sorted by name.
pub fn corpus() -> Vec<CorpusFile> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "dmir"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let source = std::fs::read_to_string(&p).unwrap();
            let program = dmir::parse(&source).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            CorpusFile {
                name: p.file_stem().unwrap().to_string_lossy().into_owned(),
                source,
                program,
            }
        })
        .collect()
}

pub fn load(name: &str) -> DmirProgram {
    let p = corpus_dir().join(format!("{name}.dmir"));
    dmir::parse(&std::fs::read_to_string(p).unwrap()).unwrap()
}

pub fn generated(p: &DmirProgram) -> Generated {
    let st = vkernel::boot(p).unwrap();
    descgen::generate(p, &extractor::build_inventory(p), &paramfuzz::relations::relate(&st)).unwrap()
}

/// Random cases built from `p`'s descriptors: a fresh case, then a few
/// mutations, so multi-thread cases show up as well.
pub fn random_cases(p: &DmirProgram, n: usize, seed: u64) -> Vec<TestCase> {
    let g = generated(p);
    let m = Mutator::new(&g.descriptors, &g.meta, Mode::SyzlangMutation, CaseLimits::default(), 0.5);
    let mut rng = SplitMix64::new(seed);
    (0..n)
        .map(|_| {
            let mut c = m.generate(&mut rng);
            for _ in 0..rng.below(6) {
                c = m.mutate(&c, &[], &mut rng);
            }
            c
        })
        .collect()
}
