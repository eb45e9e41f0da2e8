mod common;

use bsg::cli::{ModelBundle, SaveMode};
use bsg::optim::Parameters;
use bsg::{ErrorKind, ModelKind};

const KINDS: [ModelKind; 4] = [
    ModelKind::Bsg,
    ModelKind::Sg,
    ModelKind::W2gS,
    ModelKind::W2gD,
];

fn encode(b: &ModelBundle, mode: SaveMode) -> Vec<u8> {
    let mut out = Vec::new();
    b.write(&mut out, mode).unwrap();
    out
}

fn bits(b: &ModelBundle) -> Vec<u32> {
    let flat: Vec<f64> = match &b.model {
        bsg::cli::AnyModel::Bsg(m) => m.to_flat(),
        bsg::cli::AnyModel::Sg(m) => m.to_flat(),
        bsg::cli::AnyModel::W2g(m) => m.to_flat(),
    };
    flat.iter().map(|&v| (v as f32).to_bits()).collect()
}

#[test]
fn round_trip_is_bit_exact_in_both_modes() {
    for kind in KINDS {
        let b = common::trained(kind);
        for mode in [SaveMode::Text, SaveMode::Binary] {
            let back = ModelBundle::read(encode(&b, mode).as_slice()).unwrap();
            assert_eq!(back, b, "{kind:?} {mode:?}");
            assert_eq!(bits(&back), bits(&b));
        }
    }
}

#[test]
fn text_and_binary_agree() {
    let b = common::trained(ModelKind::Bsg);
    let t = ModelBundle::read(encode(&b, SaveMode::Text).as_slice()).unwrap();
    let n = ModelBundle::read(encode(&b, SaveMode::Binary).as_slice()).unwrap();
    assert_eq!(t, n);
    assert_eq!(encode(&t, SaveMode::Binary), encode(&n, SaveMode::Binary));
}

#[test]
fn save_and_load_files() {
    let b = common::trained(ModelKind::W2gS);
    let dir = tempfile::tempdir().unwrap();
    for (name, mode) in [("m.txt", SaveMode::Text), ("m.bin", SaveMode::Binary)] {
        let p = dir.path().join(name);
        b.save(&p, mode).unwrap();
        assert_eq!(ModelBundle::load(&p).unwrap(), b);
    }
}

#[test]
fn text_floats_carry_17_significant_digits() {
    let b = common::trained(ModelKind::Sg);
    let text = String::from_utf8(encode(&b, SaveMode::Text)).unwrap();
    let row = text
        .lines()
        .skip_while(|l| !l.starts_with("#SECTION input"))
        .nth(1)
        .unwrap();
    for tok in row.split(' ') {
        let mantissa = tok
            .split('e')
            .next()
            .unwrap()
            .trim_start_matches('-')
            .replace('.', "");
        assert_eq!(mantissa.len(), 17, "{tok}");
    }
    assert!(text.ends_with("#END\n"));
}

fn load_err(bytes: &[u8]) -> String {
    let e = ModelBundle::read(bytes).unwrap_err();
    assert_eq!(e.kind(), ErrorKind::Data);
    e.to_string()
}

#[test]
fn truncated_binary_names_the_missing_section() {
    let b = common::trained(ModelKind::Bsg);
    let full = encode(&b, SaveMode::Binary);
    // the last section is encoder.b2 (1 x 1 for spherical): name, length, type, shape, one float
    let b2 = 4 + 10 + 8 + 1 + 16 + 4;
    let msg = load_err(&full[..full.len() - b2]);
    assert!(
        msg.contains("encoder.b2") && msg.contains("missing section"),
        "{msg}"
    );
    let msg = load_err(&full[..full.len() - 5]);
    assert!(msg.contains("truncated section encoder.b2"), "{msg}");
    assert!(msg.contains("byte "), "{msg}");
    let msg = load_err(&full[..6]);
    assert!(msg.contains("truncated header"), "{msg}");
}

#[test]
fn truncated_text_names_the_section() {
    let b = common::trained(ModelKind::Bsg);
    let text = String::from_utf8(encode(&b, SaveMode::Text)).unwrap();
    let cut = text.find("#SECTION encoder.W").unwrap();
    let msg = load_err(text[..cut].as_bytes());
    assert!(msg.contains("encoder.b1") && msg.contains("#END"), "{msg}");

    let lines: Vec<&str> = text.lines().collect();
    let at = lines
        .iter()
        .position(|l| l.starts_with("#SECTION encoder.M"))
        .unwrap();
    let mut short: Vec<&str> = lines[..at + 2].to_vec();
    short.extend_from_slice(
        &lines[lines
            .iter()
            .position(|l| l.starts_with("#SECTION encoder.U"))
            .unwrap()..],
    );
    let msg = load_err(short.join("\n").as_bytes());
    assert!(
        msg.contains("section encoder.M") && msg.contains("row 2 of"),
        "{msg}"
    );

    let dropped: Vec<&str> = lines
        .iter()
        .copied()
        .filter(|l| !l.starts_with("#SECTION context.mean"))
        .collect();
    assert!(ModelBundle::read(dropped.join("\n").as_bytes()).is_err());
}

#[test]
fn version_mismatch_is_explicit() {
    let b = common::trained(ModelKind::Sg);
    let mut bin = encode(&b, SaveMode::Binary);
    bin[4..8].copy_from_slice(&2u32.to_le_bytes());
    let e = ModelBundle::read(bin.as_slice()).unwrap_err();
    assert!(
        matches!(
            e,
            bsg::Error::Version {
                found: 2,
                expected: 1
            }
        ),
        "{e}"
    );

    let text = String::from_utf8(encode(&b, SaveMode::Text))
        .unwrap()
        .replacen("#BSG-MODEL 1", "#BSG-MODEL 9", 1);
    let e = ModelBundle::read(text.as_bytes()).unwrap_err();
    assert!(matches!(e, bsg::Error::Version { found: 9, .. }), "{e}");
}

#[test]
fn corrupt_inputs_are_rejected() {
    assert!(load_err(b"hello").contains("unknown magic"));
    let b = common::trained(ModelKind::W2gD);
    let text = String::from_utf8(encode(&b, SaveMode::Text)).unwrap();
    let bad = text.replacen("#SECTION table.mean", "#SECTION table.mean 1 2 3", 1);
    assert!(load_err(bad.as_bytes()).contains("too many section sizes"));
    let at = text.find("#SECTION table.log_var").unwrap();
    let row_start = text[at..].find('\n').unwrap() + at + 1;
    let mut bad = text.clone();
    bad.replace_range(row_start..row_start + 1, "x");
    assert!(load_err(bad.as_bytes()).contains("bad number"));

    let mut bin = encode(&b, SaveMode::Binary);
    let pos = bin.windows(10).position(|w| w == b"table.mean").unwrap();
    bin[pos + 10 + 8] = 9;
    assert!(load_err(&bin).contains("unknown section type 9"));
}

#[test]
fn section_shapes_are_checked() {
    let b = common::trained(ModelKind::Sg);
    let text = String::from_utf8(encode(&b, SaveMode::Text)).unwrap();
    let header = text.lines().nth(2).unwrap();
    let bad = text.replacen(header, &header.replace("\"dim\":3", "\"dim\":4"), 1);
    let msg = load_err(bad.as_bytes());
    assert!(
        msg.contains("shape") && msg.contains("section input"),
        "{msg}"
    );
}
