#![no_main]

use libfuzzer_sys::fuzz_target;
use tw_tail::ensemble::{read_batch_csv, write_batch_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(batch) = read_batch_csv(data) {
        assert!(batch.beta > 0.0);
        assert!(batch.samples.iter().all(|x| x.is_finite()));
        let mut buf = Vec::new();
        write_batch_csv(&mut buf, &batch).expect("write to memory");
        let back = read_batch_csv(buf.as_slice()).expect("reparse written batch");
        assert_eq!(back.samples, batch.samples);
    }
});
