use std::fs;
use std::path::Path;

use shadowforge_core::pipeline::{tree_hash, DatasetManifest, PolicyStep, Probability};
use shadowforge_core::shadow::preset_specs;
use shadowforge_core::{
    augment_dataset, augment_image, decode_image, derive_image_seed, encode_image, scan_dataset,
    AugmentationPolicy, EncodeFormat, ImageBuffer, ShadowFactor,
};
use tempfile::TempDir;

const CLASSES: [&str; 3] = ["interlace", "rub_back", "rub_palm"];

fn frame(seed: u32, w: u32, h: u32) -> ImageBuffer {
    ImageBuffer::from_fn(w, h, |p| {
        let v = p.x * 31 + p.y * 17 + seed * 7;
        [(v % 251) as u8, ((v / 3) % 241) as u8, ((seed * 13 + p.y) % 256) as u8]
    })
    .unwrap()
}

fn write_fixture(root: &Path, per_class: u32) {
    for (c, class) in CLASSES.iter().enumerate() {
        let dir = root.join(class);
        fs::create_dir_all(&dir).unwrap();
        for i in 0..per_class {
            let seed = c as u32 * 1000 + i;
            let bytes = encode_image(&frame(seed, 24, 16), EncodeFormat::Png).unwrap();
            fs::write(dir.join(format!("frame_{i:04}.png")), bytes).unwrap();
        }
    }
}

fn paper_shadow(seed: u64) -> AugmentationPolicy {
    AugmentationPolicy::preset("paper-shadow", seed).unwrap()
}

#[test]
fn scan_lists_sorted_images_and_skips_junk() {
    let tmp = TempDir::new().unwrap();
    let root = tmp.path();
    write_fixture(root, 3);
    fs::write(root.join("rub_back/broken.png"), b"not a png").unwrap();
    fs::write(root.join("rub_back/notes.txt"), b"ignored").unwrap();
    fs::write(root.join("stray.png"), encode_image(&frame(1, 2, 2), EncodeFormat::Png).unwrap()).unwrap();
    let jpeg = encode_image(&frame(2, 8, 8), EncodeFormat::Jpeg { quality: 90 }).unwrap();
    fs::write(root.join("rub_palm/UPPER.JPG"), jpeg).unwrap();

    let manifest = scan_dataset(root).unwrap();
    let paths: Vec<_> = manifest.entries.iter().map(|e| e.relative_path.as_str()).collect();
    let mut sorted = paths.clone();
    sorted.sort();
    assert_eq!(paths, sorted);
    assert_eq!(paths.len(), 10);
    assert!(paths.contains(&"rub_palm/UPPER.JPG"));
    assert!(manifest.entries.iter().all(|e| e.relative_path.starts_with(&format!("{}/", e.class_label))));
    assert_eq!(manifest.skipped, vec!["rub_back/broken.png".to_string()]);
}

#[test]
fn empty_root_scans_to_nothing() {
    let tmp = TempDir::new().unwrap();
    let manifest = scan_dataset(tmp.path()).unwrap();
    assert!(manifest.entries.is_empty() && manifest.skipped.is_empty());
    assert!(scan_dataset(&tmp.path().join("missing")).is_err());
}

#[test]
fn runs_are_reproducible_across_reruns_and_worker_counts() {
    let tmp = TempDir::new().unwrap();
    let root = tmp.path().join("in");
    write_fixture(&root, 20);
    let policy = paper_shadow(7);

    let mut hashes = Vec::new();
    for (i, workers) in [1, 1, 4, 0].into_iter().enumerate() {
        let out = tmp.path().join(format!("out{i}"));
        augment_dataset(&root, &out, &policy, workers).unwrap();
        hashes.push(tree_hash(&out).unwrap());
    }
    assert!(hashes.windows(2).all(|w| w[0] == w[1]), "{hashes:?}");

    let other = tmp.path().join("other-seed");
    augment_dataset(&root, &other, &paper_shadow(8), 2).unwrap();
    assert_ne!(tree_hash(&other).unwrap(), hashes[0]);
}

#[test]
fn each_image_depends_only_on_its_own_path() {
    let tmp = TempDir::new().unwrap();
    let full = tmp.path().join("full");
    write_fixture(&full, 10);
    // a subset with identical relative paths
    let subset = tmp.path().join("subset");
    fs::create_dir_all(subset.join("rub_back")).unwrap();
    for name in ["frame_0003.png", "frame_0007.png"] {
        fs::copy(full.join("rub_back").join(name), subset.join("rub_back").join(name)).unwrap();
    }

    let policy = paper_shadow(11);
    let out_full = tmp.path().join("out_full");
    let out_subset = tmp.path().join("out_subset");
    augment_dataset(&full, &out_full, &policy, 3).unwrap();
    augment_dataset(&subset, &out_subset, &policy, 1).unwrap();
    for name in ["frame_0003.png", "frame_0007.png"] {
        let rel = Path::new("rub_back").join(name);
        assert_eq!(fs::read(out_full.join(&rel)).unwrap(), fs::read(out_subset.join(&rel)).unwrap());
    }
}

#[test]
fn manifest_replays_every_image() {
    let tmp = TempDir::new().unwrap();
    let root = tmp.path().join("in");
    let out = tmp.path().join("out");
    write_fixture(&root, 8);
    let policy = paper_shadow(3);
    let manifest = augment_dataset(&root, &out, &policy, 2).unwrap();

    let reread: DatasetManifest = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(reread, manifest);
    assert_eq!(manifest.entries.len(), 24);

    for entry in &manifest.entries {
        assert_eq!(entry.image_seed, derive_image_seed(3, &entry.relative_path));
        let original = decode_image(&fs::read(root.join(&entry.relative_path)).unwrap()).unwrap();
        let replay_policy = reread.policy.as_ref().unwrap();
        let (img, ops) = augment_image(&original, replay_policy, entry.image_seed);
        assert_eq!(ops, entry.applied_ops);
        let written = decode_image(&fs::read(out.join(&entry.relative_path)).unwrap()).unwrap();
        assert_eq!(img, written);
    }
}

#[test]
fn gate_fires_at_the_configured_rate() {
    let factor = ShadowFactor::new(0.5).unwrap();
    let policy = AugmentationPolicy::new(
        vec![PolicyStep::Shadow {
            prob: Probability::new(0.5).unwrap(),
            specs: preset_specs(factor),
        }],
        99,
    )
    .unwrap();
    let img = frame(0, 4, 4);
    let n = 4000;
    let mut fired = 0;
    let mut chosen = [0usize; 4];
    for i in 0..n {
        let seed = derive_image_seed(99, &format!("c{}/img_{i:05}.png", i % 7));
        let (_, ops) = augment_image(&img, &policy, seed);
        if let Some(op) = ops.first() {
            fired += 1;
            chosen[op.params["index"].as_u64().unwrap() as usize] += 1;
        }
    }
    let rate = fired as f64 / n as f64;
    // 4 sigma is about 0.032 at n = 4000
    assert!((rate - 0.5).abs() < 0.032, "{rate}");
    for c in chosen {
        let share = c as f64 / fired as f64;
        assert!((share - 0.25).abs() < 0.05, "{chosen:?}");
    }
}
