use adk_core::lsk::io::{decode_params, decode_tensor, encode_params, encode_tensor, tensor_checksum};
use adk_core::lsk::{lsk_forward_traced, ConvPath, LskParams, Tensor4};
use anyhow::{Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::args::{ConvImpl, LskArgs};

fn read_bytes(p: &std::path::Path) -> Result<Vec<u8>> {
    std::fs::read(p).with_context(|| format!("reading {}", p.display()))
}

fn write_bytes(p: &std::path::Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display()))
}

pub fn lsk(a: LskArgs) -> Result<()> {
    let x: Tensor4<f32> = match &a.input {
        Some(p) => decode_tensor(&read_bytes(p)?).with_context(|| format!("in {}", p.display()))?,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.init_seed);
            Tensor4::from_fn(a.shape, |_| rng.random_range(-1.0..1.0))
        }
    };
    let params: LskParams<f32> = match &a.params {
        Some(p) => decode_params(&read_bytes(p)?).with_context(|| format!("in {}", p.display()))?,
        None => LskParams::random(x.channels(), a.init_seed.wrapping_add(1), 0.3)?,
    };
    anyhow::ensure!(
        params.channels == x.channels(),
        "parameters are for {} channels, input has {}",
        params.channels,
        x.channels()
    );
    let path = match a.conv {
        ConvImpl::Fast => ConvPath::Fast,
        ConvImpl::Direct => ConvPath::Direct,
    };
    let trace = lsk_forward_traced(&x, &params, path)?;
    let (lo, hi) = trace.attention.data().iter().fold((f32::INFINITY, f32::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let d = trace.output.dims();
    println!("output {}x{}x{}x{}  sha256 {}", d[0], d[1], d[2], d[3], tensor_checksum(&trace.output));
    println!("attention range [{lo:.6}, {hi:.6}]");
    if a.check {
        let other = if path == ConvPath::Fast { ConvPath::Direct } else { ConvPath::Fast };
        let reference = lsk_forward_traced(&x, &params, other)?;
        println!("max |fast - direct| {:e}", trace.output.max_abs_diff(&reference.output));
    }
    if let Some(p) = &a.out {
        write_bytes(p, &encode_tensor(&trace.output))?;
    }
    if let Some(p) = &a.save_params {
        write_bytes(p, &encode_params(&params))?;
    }
    Ok(())
}
