#![allow(dead_code)]

use std::fs;
use std::path::Path;

pub const HEADER: &str = "method,dataset,split,epochs,segment,imgaug,batchsize,imgsize,resizefilter,colorspace,classweights";

/// A comma-joined experiment row with the given overrides.
pub fn row(method: &str, dataset: &str, epochs: usize, imgaug: &str, filter: &str) -> String {
    format!("{method},{dataset},n=20,{epochs},0,{imgaug},12,32,{filter},RGB,compute")
}

pub fn write_experiment(path: &Path, rows: &[String]) {
    let mut s = String::from(HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(r);
        s.push('\n');
    }
    fs::write(path, s).unwrap();
}

/// Columns of a CSV file as records of strings.
pub fn read_csv(path: &Path) -> Vec<Vec<String>> {
    lesionkit_core::record::read_records(&fs::read_to_string(path).unwrap())
        .into_iter()
        .map(|r| r.fields)
        .collect()
}

pub fn column(table: &[Vec<String>], name: &str) -> usize {
    table[0]
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"))
}
