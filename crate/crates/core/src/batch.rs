//! Batch decoding. With the `parallel` feature the batch fans out over the
//! rayon pool; otherwise it runs on the calling thread. Output order always
//! matches input order.

use crate::pipeline::{DecodeError, DecodeResult, Decoder};

pub fn decode_batch_sequential<S: AsRef<str>>(decoder: &Decoder, raws: &[S], now: i64) -> Vec<Result<DecodeResult, DecodeError>> {
    raws.iter().map(|raw| decoder.decode_json(raw.as_ref(), now)).collect()
}

#[cfg(feature = "parallel")]
pub fn decode_batch_parallel<S: AsRef<str> + Sync>(decoder: &Decoder, raws: &[S], now: i64) -> Vec<Result<DecodeResult, DecodeError>> {
    use rayon::prelude::*;
    raws.par_iter().map(|raw| decoder.decode_json(raw.as_ref(), now)).collect()
}

pub fn decode_batch<S: AsRef<str> + Sync>(decoder: &Decoder, raws: &[S], now: i64) -> Vec<Result<DecodeResult, DecodeError>> {
    #[cfg(feature = "parallel")]
    {
        decode_batch_parallel(decoder, raws, now)
    }
    #[cfg(not(feature = "parallel"))]
    {
        decode_batch_sequential(decoder, raws, now)
    }
}
