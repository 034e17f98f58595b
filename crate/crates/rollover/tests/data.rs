//! Shipped quote files: pinned contents and lossless round trips.

use std::path::{Path, PathBuf};

use rollover::io::{load_coefficients, load_quotes, save_quotes};
use sha2::{Digest, Sha256};

const PINNED: [(&str, &str); 7] = [
    ("cds_coefficients_2013-01-01.csv", "49f03a7eb8e3acb76a56ae74cdba738c0c88c80ad64a232af2baea421e1e87ec"),
    ("quotes_2013-01-01.csv", "9b35874700e91ab9cb5cd10a24ba1002b348cc1880e0c3f41a84a65fe8da8d06"),
    ("quotes_2014-09-08.csv", "0e7db7cdbf70e90219cb49b07997d0800a06bd0f7909f4fbe7dca33862e3fd6c"),
    ("quotes_2015-06-18.csv", "5bac3b419c6d0eeebbe17dfa0221c62a3fd51a29e839720291b37f6c1f75e0e7"),
    ("quotes_2016-04-20.csv", "e4bb57b4912d16eb18d0f15faa5e98971eede7edc43df4b23161a871aa9583a9"),
    ("quotes_2017-03-22.csv", "e7411bb775d68ce756dda1b53a9ddaaaafe99e72885da832b7b91df587d5b6bc"),
    ("quotes_2017-10-31.csv", "85a1ff549dcac75c4ee6f29598ef5bf6d51412a8682720eb96991514d726dc2b"),
];

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

#[test]
fn data_files_are_pinned() {
    for (name, want) in PINNED {
        let bytes = std::fs::read(data(name)).unwrap();
        let got: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(got, want, "{name} changed");
    }
}

#[test]
fn quote_files_round_trip_through_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    for (name, _) in &PINNED[1..] {
        let qs = load_quotes(&data(name)).unwrap();
        assert!(!qs.is_empty());
        let stem = name.trim_end_matches(".csv");
        for ext in ["csv", "json"] {
            let p = dir.path().join(format!("{stem}.{ext}"));
            save_quotes(&qs, &p).unwrap();
            let back = load_quotes(&p).unwrap();
            assert!(back.quotes.iter().all(|q| !q.swapped), "{name} via {ext}");
            let mut want = qs.clone();
            want.quotes.iter_mut().for_each(|q| q.swapped = false);
            assert_eq!(back, want, "{name} via {ext}");
        }
    }
}

#[test]
fn every_day_has_swaps_basis_and_cds() {
    use rollover_core::market::{build_instruments, QuoteKind};
    for (name, _) in &PINNED[1..] {
        let qs = load_quotes(&data(name)).unwrap();
        assert!(!qs.of_kind(QuoteKind::Ois).is_empty(), "{name}");
        assert!(!qs.cds_entities().is_empty(), "{name}");
        let inst = build_instruments(&qs).unwrap();
        assert!(inst.swaps.len() >= 27, "{name}: {} swap conditions", inst.swaps.len());
    }
}

#[test]
fn coefficient_file_has_both_factor_counts() {
    let rows = load_coefficients(&data("cds_coefficients_2013-01-01.csv")).unwrap();
    assert_eq!(rows.len(), 300);
    assert!(rows.iter().any(|r| r.factors == 1));
    assert!(rows.iter().any(|r| r.factors == 3));
}
