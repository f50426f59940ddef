// Temporary development helper: writes fuzz corpus seed files.
// Not part of the deliverable.

use sicnet_core::fec::ConvCode;
use sicnet_core::harness::{rows_to_csv, ResultRow};
use sicnet_core::sicnet::{default_hidden_widths, SicNetModel};
use std::fs;

fn main() {
    let dir = "fuzz/corpus";

    // Valid small checkpoints.
    let tiny = SicNetModel::build(1, 2, &[vec![4]], 1, 3).unwrap();
    let mut bytes = Vec::new();
    tiny.save_to(&mut bytes).unwrap();
    fs::write(format!("{dir}/checkpoint_load/tiny_k1.ckpt"), &bytes).unwrap();
    let reference = SicNetModel::build(3, 2, &default_hidden_widths(3), 1, 3).unwrap();
    let mut bytes = Vec::new();
    reference.save_to(&mut bytes).unwrap();
    fs::write(format!("{dir}/checkpoint_load/reference_k3.ckpt"), &bytes).unwrap();
    fs::write(format!("{dir}/checkpoint_load/truncated.ckpt"), &bytes[..21]).unwrap();

    // Config files.
    fs::write(
        format!("{dir}/config_parse/full.conf"),
        "# experiment configuration\nseed = 42\ntrials = 100000\nsnr_grid = 0,2,4,6,8,10,12,14\ncsi_error_var = 0.01\nchannel = quantized\nloss = local\nout = results.csv\n",
    )
    .unwrap();
    fs::write(format!("{dir}/config_parse/minimal.conf"), "seed=1\n").unwrap();

    // CSV files.
    let rows = vec![
        ResultRow::new("fig4", "sic-perfect", 6.0, 100000, 4056, 0.0, 10),
        ResultRow::new("fig4", "sicnet-local-perfect", 6.0, 100000, 4504, 0.0, 11),
    ];
    fs::write(format!("{dir}/csv_parse/fig4.csv"), rows_to_csv(&rows).unwrap()).unwrap();

    // Coded bit streams: a clean codeword and a corrupted one.
    let code = ConvCode::new();
    let coded = code.encode(&[1, 0, 1, 1, 0, 0, 1, 1, 1, 0]).unwrap();
    fs::write(format!("{dir}/viterbi_hard/clean.bits"), &coded).unwrap();
    let mut corrupted = coded.clone();
    corrupted[3] ^= 1;
    corrupted[11] ^= 1;
    fs::write(format!("{dir}/viterbi_hard/two_flips.bits"), &corrupted).unwrap();

    // LLR stream matching the clean codeword.
    let llrs: Vec<u8> = coded
        .iter()
        .flat_map(|&c| (if c == 0 { 4.0f64 } else { -4.0 }).to_le_bytes())
        .collect();
    fs::write(format!("{dir}/viterbi_soft/clean.llrs"), &llrs).unwrap();

    println!("corpus written");
}
