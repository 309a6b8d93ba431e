use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use kgcred::catalog::FrameMode;
use kgcred::corpus::DEFAULT_FRACTIONS;
use kgcred::eval::{gen_synthetic, prepare_data, train_model, ModelConfig, ModelKind, SynthConfig, TrainedModel};
use kgcred::features::build_features;
use kgcred::pipeline::{freeze_negatives, DataBundle, SelectionOptions};
use kgcred::relevance::{FrameFilter, SentenceCount};
use kgcred_ffi::*;

struct Fixture {
    _dir: tempfile::TempDir,
    data: PathBuf,
    mlp: PathBuf,
    lr: PathBuf,
    bundle: DataBundle,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let bundle = gen_synthetic(&SynthConfig {
        facts_per_relation: 30,
        seed: 5,
        ..Default::default()
    })
    .unwrap();
    let data = dir.path().join("data");
    bundle.write(&data).unwrap();
    let splits = freeze_negatives(&bundle, DEFAULT_FRACTIONS, 5).unwrap();
    let prepared = prepare_data(&bundle, &bundle.catalog, &splits, &SelectionOptions::default(), 5).unwrap();
    let mut cfg = ModelConfig::default();
    cfg.train.epochs = 1;
    let n = bundle.catalog.len();
    let mlp = dir.path().join("mlp.bin");
    train_model(ModelKind::Mlp, &cfg, &prepared.train, n, &bundle.embeddings, 5)
        .unwrap()
        .model
        .save(&mlp)
        .unwrap();
    let lr = dir.path().join("lr.bin");
    let kind: ModelKind = "lr-count".parse().unwrap();
    train_model(kind, &cfg, &prepared.train, n, &bundle.embeddings, 5)
        .unwrap()
        .model
        .save(&lr)
        .unwrap();
    Fixture {
        _dir: dir,
        data,
        mlp,
        lr,
        bundle,
    }
}

fn cpath(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = kg_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn load_model(path: &Path) -> *mut KgModel {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { kg_model_load(cpath(path).as_ptr(), &mut m) }, KgStatus::Ok);
    assert!(!m.is_null());
    m
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(kg_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn forward_matches_core_inference() {
    let fx = fixture();
    let m = load_model(&fx.mlp);
    let mut info = KgModelInfo::default();
    assert_eq!(unsafe { kg_model_info(m, &mut info) }, KgStatus::Ok);
    assert_eq!(info.kind, KgModelKind::Mlp as u32);
    assert_eq!(info.embedding_dim, 32);
    assert_eq!(info.num_classes, fx.bundle.catalog.len());
    assert_eq!(info.depth, 2);

    let TrainedModel::Mlp(core) = TrainedModel::load(&fx.mlp, None).unwrap() else {
        panic!("expected an MLP");
    };
    let x: Vec<f64> = (0..info.embedding_dim + info.num_flags)
        .map(|i| (i as f64 * 0.37).sin())
        .collect();
    let (want_cred, want_repair) = core.infer(&x).unwrap();
    let mut cred = f64::NAN;
    let mut repair = vec![0.0; info.num_classes];
    let st = unsafe { kg_model_forward(m, x.as_ptr(), x.len(), &mut cred, repair.as_mut_ptr(), repair.len()) };
    assert_eq!(st, KgStatus::Ok);
    assert_eq!(cred.to_bits(), want_cred.to_bits());
    assert_eq!(repair, want_repair);

    let st = unsafe { kg_model_forward(m, x.as_ptr(), x.len() - 1, &mut cred, repair.as_mut_ptr(), repair.len()) };
    assert_eq!(st, KgStatus::Dimension);
    let st = unsafe { kg_model_forward(m, x.as_ptr(), x.len(), &mut cred, repair.as_mut_ptr(), repair.len() - 1) };
    assert_eq!(st, KgStatus::Dimension);
    assert!(last_error().contains("classes"));
    unsafe { kg_model_free(m) };
}

#[test]
fn predict_matches_core_verdict() {
    let fx = fixture();
    let m = load_model(&fx.mlp);
    let mut c = ptr::null_mut();
    assert_eq!(
        unsafe { kg_corpus_load(cpath(&fx.data).as_ptr(), &mut c) },
        KgStatus::Ok
    );
    let n = unsafe { kg_corpus_num_classes(c) };
    assert_eq!(n, fx.bundle.catalog.len());
    for i in 0..n {
        let name = unsafe { CStr::from_ptr(kg_corpus_relation_name(c, i)) };
        assert_eq!(name.to_str().unwrap(), fx.bundle.catalog.name(i));
    }
    assert!(unsafe { kg_corpus_relation_name(c, n) }.is_null());

    let core = TrainedModel::load(&fx.mlp, None).unwrap();
    let ctx = fx.bundle.relevance(&fx.bundle.catalog, FrameMode::Expert);
    let mut checked = 0;
    for fact in fx.bundle.facts.iter().take(20) {
        let doc = fx.bundle.documents.require(&fact.doc_id).unwrap();
        let sentences = ctx.select_sentences(doc, fact, SentenceCount::All, 0, FrameFilter::AllRelevant);
        let s = CString::new(fact.subject.as_str()).unwrap();
        let r = CString::new(fact.relation.as_str()).unwrap();
        let o = CString::new(fact.object.as_str()).unwrap();
        let d = CString::new(fact.doc_id.as_str()).unwrap();
        let mut v = KgVerdict::default();
        let st = unsafe { kg_predict(m, c, s.as_ptr(), r.as_ptr(), o.as_ptr(), d.as_ptr(), &mut v) };
        if sentences.is_empty() {
            assert_eq!(st, KgStatus::NoProvenance);
            continue;
        }
        assert_eq!(st, KgStatus::Ok);
        let want = core
            .verdict(
                &sentences,
                &fx.bundle.embeddings,
                fx.bundle.catalog.cannot_repair_index(),
            )
            .unwrap();
        assert_eq!(v.credible, want.credible);
        assert_eq!(v.cred_score.to_bits(), want.cred_score.to_bits());
        assert_eq!(v.repair, want.repair.map_or(-1, |r| r as i64));
        assert_eq!(v.unrepairable, want.unrepairable);
        // same input the MLP sees through the raw entry point
        let x = build_features(&sentences, &fx.bundle.embeddings).unwrap();
        let mut cred = 0.0;
        let mut repair = vec![0.0; n];
        unsafe { kg_model_forward(m, x.values().as_ptr(), x.len(), &mut cred, repair.as_mut_ptr(), n) };
        assert_eq!(cred.to_bits(), v.cred_score.to_bits());
        checked += 1;
    }
    assert!(checked > 10);

    let bad = CString::new("no_such_relation").unwrap();
    let f = &fx.bundle.facts[0];
    let s = CString::new(f.subject.as_str()).unwrap();
    let o = CString::new(f.object.as_str()).unwrap();
    let d = CString::new(f.doc_id.as_str()).unwrap();
    let mut v = KgVerdict::default();
    let st = unsafe { kg_predict(m, c, s.as_ptr(), bad.as_ptr(), o.as_ptr(), d.as_ptr(), &mut v) };
    assert_eq!(st, KgStatus::Data);
    unsafe {
        kg_corpus_free(c);
        kg_model_free(m);
    }
}

#[test]
fn lr_models_load_and_predict_but_refuse_raw_forward() {
    let fx = fixture();
    let m = load_model(&fx.lr);
    let mut info = KgModelInfo::default();
    assert_eq!(unsafe { kg_model_info(m, &mut info) }, KgStatus::Ok);
    assert_eq!(info.kind, KgModelKind::LrCount as u32);
    assert_eq!(info.embedding_dim, 0);
    let x = [0.0; 4];
    let mut cred = 0.0;
    let mut repair = vec![0.0; info.num_classes];
    let st = unsafe { kg_model_forward(m, x.as_ptr(), x.len(), &mut cred, repair.as_mut_ptr(), repair.len()) };
    assert_eq!(st, KgStatus::Unsupported);

    let mut c = ptr::null_mut();
    assert_eq!(
        unsafe { kg_corpus_load(cpath(&fx.data).as_ptr(), &mut c) },
        KgStatus::Ok
    );
    let f = &fx.bundle.facts[0];
    let [s, r, o, d] = [&f.subject, &f.relation, &f.object, &f.doc_id].map(|t| CString::new(t.as_str()).unwrap());
    let mut v = KgVerdict::default();
    let st = unsafe { kg_predict(m, c, s.as_ptr(), r.as_ptr(), o.as_ptr(), d.as_ptr(), &mut v) };
    assert!(matches!(st, KgStatus::Ok | KgStatus::NoProvenance));
    if st == KgStatus::Ok {
        assert!((0.0..=1.0).contains(&v.cred_score));
    }
    unsafe {
        kg_corpus_free(c);
        kg_model_free(m);
    }
}

#[test]
fn error_codes() {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { kg_model_load(ptr::null(), &mut m) }, KgStatus::NullArgument);
    assert!(last_error().contains("path"));
    let p = CString::new("/nonexistent/model.bin").unwrap();
    assert_eq!(
        unsafe { kg_model_load(p.as_ptr(), ptr::null_mut()) },
        KgStatus::NullArgument
    );
    assert_eq!(unsafe { kg_model_load(p.as_ptr(), &mut m) }, KgStatus::Io);
    assert!(m.is_null());

    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.bin");
    std::fs::write(&junk, b"not a model at all").unwrap();
    assert_eq!(unsafe { kg_model_load(cpath(&junk).as_ptr(), &mut m) }, KgStatus::Data);
    assert!(!last_error().is_empty());

    let invalid = [0xffu8, 0xfe, 0];
    assert_eq!(
        unsafe { kg_model_load(invalid.as_ptr().cast(), &mut m) },
        KgStatus::InvalidUtf8
    );

    let mut c = ptr::null_mut();
    assert_eq!(
        unsafe { kg_corpus_load(cpath(dir.path()).as_ptr(), &mut c) },
        KgStatus::Io
    );
    assert!(c.is_null());
    assert_eq!(unsafe { kg_corpus_num_classes(ptr::null()) }, 0);
    assert!(unsafe { kg_corpus_relation_name(ptr::null(), 0) }.is_null());
    let mut info = KgModelInfo::default();
    assert_eq!(unsafe { kg_model_info(ptr::null(), &mut info) }, KgStatus::NullArgument);
    unsafe {
        kg_model_free(ptr::null_mut());
        kg_corpus_free(ptr::null_mut());
    }
}

#[test]
fn generated_header_declares_the_api() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/kgcred.h")).unwrap();
    for name in [
        "kg_version",
        "kg_last_error",
        "kg_model_load",
        "kg_model_free",
        "kg_model_info",
        "kg_model_forward",
        "kg_corpus_load",
        "kg_corpus_free",
        "kg_corpus_num_classes",
        "kg_corpus_relation_name",
        "kg_predict",
        "KG_STATUS_NO_PROVENANCE",
        "typedef struct KgModel KgModel",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

// Builds a small C program against the header and the shared library.
#[test]
fn c_program_links_and_runs() {
    let Some(cc) = ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok())
    else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let libdir = exe.parent().unwrap().parent().unwrap();
    if !libdir.join("libkgcred_ffi.so").exists() {
        eprintln!("shared library not built at {}; skipping", libdir.display());
        return;
    }
    let fx = fixture();
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "kgcred.h"
int main(int argc, char **argv) {
    KgModel *m = NULL;
    if (kg_model_load(argv[1], &m) != KG_STATUS_OK) { fprintf(stderr, "%s\n", kg_last_error()); return 1; }
    KgModelInfo info;
    kg_model_info(m, &info);
    KgModel *bad = NULL;
    KgStatus st = kg_model_load("/nonexistent", &bad);
    printf("%s %zu %zu %d\n", kg_version(), info.embedding_dim, info.num_classes, (int)st);
    kg_model_free(m);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("main");
    let out = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg("-L")
        .arg(libdir)
        .arg("-lkgcred_ffi")
        .arg("-o")
        .arg(&bin)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&bin)
        .arg(&fx.mlp)
        .env("LD_LIBRARY_PATH", libdir)
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let stdout = String::from_utf8(run.stdout).unwrap();
    let want = format!(
        "{} 32 {} {}\n",
        env!("CARGO_PKG_VERSION"),
        fx.bundle.catalog.len(),
        KgStatus::Io as i32
    );
    assert_eq!(stdout, want);
}
