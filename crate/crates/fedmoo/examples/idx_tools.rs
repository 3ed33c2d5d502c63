//! Generate a synthetic digit IDX pair, write it to disk, re-parse it,
//! and print the header the `parse-idx` subcommand would show.
//!
//! ```bash
//! cargo run --release -p fedmoo --example idx_tools
//! ```

use fedmoo::core::{RngStream, StreamLane};
use fedmoo::data::{parse_idx, synth_digits_idx, DigitSynthParams};

fn main() {
    let (images, labels) = synth_digits_idx(
        256,
        &DigitSynthParams::default(),
        RngStream::for_data(5, 0, StreamLane::Synth),
    )
    .unwrap();

    let dir = std::env::temp_dir().join("fedmoo_idx_demo");
    std::fs::create_dir_all(&dir).unwrap();
    let img_path = dir.join("digits-images-idx3-ubyte");
    let lbl_path = dir.join("digits-labels-idx1-ubyte");
    std::fs::write(&img_path, images.to_bytes()).unwrap();
    std::fs::write(&lbl_path, labels.to_bytes()).unwrap();

    for path in [&img_path, &lbl_path] {
        let bytes = std::fs::read(path).unwrap();
        let idx = parse_idx(&bytes).unwrap();
        let dims: Vec<String> = idx.dims.iter().map(|d| d.to_string()).collect();
        println!(
            "{}\n  magic {:#010x}, dims {}, payload {} bytes",
            path.display(),
            idx.magic(),
            dims.join(" x "),
            idx.payload.len()
        );
        assert_eq!(idx.to_bytes(), bytes, "round trip is exact");
    }

    // label histogram of the generated set
    let mut hist = [0usize; 10];
    for l in &labels.payload {
        hist[*l as usize] += 1;
    }
    println!("label histogram: {hist:?}");
}
