#![no_main]

use ldg_core::field::Field;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(field) = Field::from_csv_str(text) {
        let back = Field::from_csv_str(&field.to_csv_string()).expect("written field parses");
        assert_eq!(back.nx(), field.nx());
        assert_eq!(back.ny(), field.ny());
    }
});
