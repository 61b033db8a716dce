//! Spike trains round-trip through CSV (`amplitude,x1,...,xd`).

use spikebench::spike::{min_pairwise_separation, SpikeTrain};

fn main() -> spikebench::error::Result<()> {
    let train =
        SpikeTrain::from_parts(3, &[1.2, 1.8], &[vec![1.0, 2.0, 0.1], vec![4.0, 4.5, 0.7]])?;
    let mut buf = Vec::new();
    train.write_csv(&mut buf)?;
    print!("{}", String::from_utf8_lossy(&buf));
    let back = SpikeTrain::read_csv(buf.as_slice())?;
    assert_eq!(back, train);
    println!("min separation {:.3}", min_pairwise_separation(&back));
    Ok(())
}
